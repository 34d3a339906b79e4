//! S-expressions returned by SMT solvers and the values inside them.

use crate::bv::BitVec;
use crate::term::{Sort, Value};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

impl Sexp {
    pub fn as_atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom(a) => Some(a),
            Sexp::List(_) => None,
        }
    }
}

/// Balance of open parentheses in `s`, ignoring strings and quoted symbols.
pub fn paren_depth(s: &str) -> i64 {
    let mut depth = 0;
    let mut quote: Option<char> = None;
    for c in s.chars() {
        match (quote, c) {
            (Some(q), c) if c == q => quote = None,
            (Some(_), _) => {}
            (None, '"') | (None, '|') => quote = Some(c),
            (None, '(') => depth += 1,
            (None, ')') => depth -= 1,
            _ => {}
        }
    }
    depth
}

pub fn parse_sexps(s: &str) -> Result<Vec<Sexp>, String> {
    let chars: Vec<char> = s.chars().collect();
    let mut pos = 0;
    let mut out = Vec::new();
    loop {
        skip_ws(&chars, &mut pos);
        if pos >= chars.len() {
            return Ok(out);
        }
        out.push(parse_one(&chars, &mut pos)?);
    }
}

fn skip_ws(c: &[char], pos: &mut usize) {
    while *pos < c.len() {
        if c[*pos].is_whitespace() {
            *pos += 1;
        } else if c[*pos] == ';' {
            while *pos < c.len() && c[*pos] != '\n' {
                *pos += 1;
            }
        } else {
            break;
        }
    }
}

fn parse_one(c: &[char], pos: &mut usize) -> Result<Sexp, String> {
    skip_ws(c, pos);
    match c.get(*pos) {
        None => Err("unexpected end of input".into()),
        Some(')') => Err(format!("unexpected `)` at offset {pos}")),
        Some('(') => {
            *pos += 1;
            let mut items = Vec::new();
            loop {
                skip_ws(c, pos);
                match c.get(*pos) {
                    None => return Err("unclosed `(`".into()),
                    Some(')') => {
                        *pos += 1;
                        return Ok(Sexp::List(items));
                    }
                    _ => items.push(parse_one(c, pos)?),
                }
            }
        }
        Some(&q) if q == '|' || q == '"' => {
            let start = *pos;
            *pos += 1;
            while *pos < c.len() && c[*pos] != q {
                *pos += 1;
            }
            if *pos >= c.len() {
                return Err(format!("unterminated {q}"));
            }
            *pos += 1;
            Ok(Sexp::Atom(c[start..*pos].iter().collect()))
        }
        Some(_) => {
            let start = *pos;
            while *pos < c.len() && !c[*pos].is_whitespace() && c[*pos] != '(' && c[*pos] != ')' {
                *pos += 1;
            }
            Ok(Sexp::Atom(c[start..*pos].iter().collect()))
        }
    }
}

fn literal_bits(a: &str) -> Option<(u32, BitVec)> {
    if let Some(h) = a.strip_prefix("#x") {
        let w = 4 * h.len() as u32;
        let v = num_bigint::BigInt::parse_bytes(h.as_bytes(), 16)?;
        Some((w, BitVec::from_bigint(w, &v)))
    } else if let Some(b) = a.strip_prefix("#b") {
        let w = b.len() as u32;
        let v = num_bigint::BigInt::parse_bytes(b.as_bytes(), 2)?;
        Some((w, BitVec::from_bigint(w, &v)))
    } else {
        None
    }
}

/// Decodes a model value of the given sort.
pub fn parse_value(e: &Sexp, sort: Sort) -> Result<Value, String> {
    let bad = || format!("cannot read {e:?} as {sort}");
    match (sort, e) {
        (Sort::Bool, Sexp::Atom(a)) => match a.as_str() {
            "true" => Ok(Value::Bool(true)),
            "false" => Ok(Value::Bool(false)),
            _ => Err(bad()),
        },
        (Sort::BV(w), Sexp::Atom(a)) => {
            let (lw, b) = literal_bits(a).ok_or_else(bad)?;
            if lw != w {
                return Err(bad());
            }
            Ok(Value::BV(b))
        }
        (Sort::BV(w), Sexp::List(items)) => {
            // (_ bvN w)
            match items.as_slice() {
                [Sexp::Atom(u), Sexp::Atom(n), Sexp::Atom(wd)] if u == "_" && n.starts_with("bv") => {
                    if wd.parse::<u32>().ok() != Some(w) {
                        return Err(bad());
                    }
                    let v = num_bigint::BigInt::parse_bytes(n[2..].as_bytes(), 10).ok_or_else(bad)?;
                    Ok(Value::BV(BitVec::from_bigint(w, &v)))
                }
                _ => Err(bad()),
            }
        }
        (Sort::FP, Sexp::List(items)) => match items.as_slice() {
            [Sexp::Atom(f), s, x, m] if f == "fp" => {
                let bits = |e: &Sexp| e.as_atom().and_then(literal_bits).ok_or_else(bad);
                let (sw, s) = bits(s)?;
                let (xw, x) = bits(x)?;
                let (mw, m) = bits(m)?;
                if sw != 1 || xw != 11 || mw != 52 {
                    return Err(bad());
                }
                let raw = (s.to_unsigned() << 63u32) | (x.to_unsigned() << 52u32) | m.to_unsigned();
                let raw: u64 = num_traits::ToPrimitive::to_u64(&raw).ok_or_else(bad)?;
                Ok(Value::FP(f64::from_bits(raw)))
            }
            [Sexp::Atom(u), Sexp::Atom(k), Sexp::Atom(eb), Sexp::Atom(sb)] if u == "_" && eb == "11" && sb == "53" => {
                match k.as_str() {
                    "+zero" => Ok(Value::FP(0.0)),
                    "-zero" => Ok(Value::FP(-0.0)),
                    "+oo" => Ok(Value::FP(f64::INFINITY)),
                    "-oo" => Ok(Value::FP(f64::NEG_INFINITY)),
                    "NaN" => Ok(Value::FP(f64::NAN)),
                    _ => Err(bad()),
                }
            }
            _ => Err(bad()),
        },
        _ => Err(bad()),
    }
}
