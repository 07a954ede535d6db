use num::Signed;

use super::signature::{Assoc, Signature, ATOM_PREC, DERIV, LIST, NEG, PREFIX_PREC};
use super::term::Term;

/// Linear, precedence-aware printing with minimal parentheses.
pub fn render(t: &Term, sig: &Signature) -> String {
    let mut out = String::new();
    write_term(t, sig, 0, &mut out);
    out
}

fn prec_of(t: &Term, sig: &Signature) -> u8 {
    if let Term::App { head, args, .. } = t {
        if let Term::Const { name, .. } = head.as_ref() {
            if args.len() == 2 {
                if let Some(f) = sig.fixity(name) {
                    return f.prec;
                }
            }
            if (name == NEG && args.len() == 1) || (name == DERIV && args.len() == 2) {
                return PREFIX_PREC;
            }
        }
    }
    ATOM_PREC
}

fn is_juxtaposable(arg: &Term) -> bool {
    match arg {
        Term::Var { .. } | Term::Const { .. } => true,
        Term::Num { value, .. } => !value.is_negative(),
        Term::App { .. } => arg.head_name() == Some(LIST),
    }
}

fn write_term(t: &Term, sig: &Signature, min_prec: u8, out: &mut String) {
    let p = prec_of(t, sig);
    if p < min_prec {
        out.push('(');
        write_term(t, sig, 0, out);
        out.push(')');
        return;
    }
    match t {
        Term::Const { name, .. } | Term::Var { name, .. } => out.push_str(name),
        Term::Num { value, .. } => out.push_str(&value.to_string()),
        Term::App { head, args, .. } => {
            if let Term::Const { name, .. } = head.as_ref() {
                if name == LIST {
                    out.push('[');
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            out.push_str(", ");
                        }
                        write_term(a, sig, 0, out);
                    }
                    out.push(']');
                    return;
                }
                if args.len() == 2 {
                    if let Some(f) = sig.fixity(name) {
                        let (lmin, rmin) = match f.assoc {
                            Assoc::Left => (f.prec, f.prec + 1),
                            Assoc::Right => (f.prec + 1, f.prec),
                            Assoc::None => (f.prec + 1, f.prec + 1),
                        };
                        write_term(&args[0], sig, lmin, out);
                        out.push(' ');
                        out.push_str(name);
                        out.push(' ');
                        write_term(&args[1], sig, rmin, out);
                        return;
                    }
                }
                if name == NEG && args.len() == 1 {
                    out.push('-');
                    if matches!(args[0], Term::Num { .. }) {
                        out.push('(');
                        write_term(&args[0], sig, 0, out);
                        out.push(')');
                    } else {
                        write_term(&args[0], sig, PREFIX_PREC, out);
                    }
                    return;
                }
                if name == DERIV && args.len() == 2 {
                    if let Some(v) = args[0].var_name() {
                        out.push_str("d/d");
                        out.push_str(v);
                        out.push(' ');
                        write_term(&args[1], sig, PREFIX_PREC, out);
                        return;
                    }
                }
            }
            match head.as_ref() {
                Term::Const { .. } | Term::Var { .. } => write_term(head, sig, ATOM_PREC, out),
                _ => {
                    out.push('(');
                    write_term(head, sig, 0, out);
                    out.push(')');
                }
            }
            if args.len() == 1 && is_juxtaposable(&args[0]) {
                out.push(' ');
                write_term(&args[0], sig, ATOM_PREC, out);
            } else {
                out.push('(');
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    write_term(a, sig, 0, out);
                }
                out.push(')');
            }
        }
    }
}
