use std::fmt;

/// A closed time interval `[lo, hi]` with `0 <= lo <= hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Option<Self> {
        (lo >= 0.0 && hi >= lo && hi.is_finite()).then_some(Self { lo, hi })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Ge,
    Le,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Predicate {
    /// Membership in a named region; `inside == false` means outside.
    Region { name: String, inside: bool },
    /// `coeffs . x + offset ~ 0`.
    Affine {
        coeffs: [f64; 2],
        offset: f64,
        rel: Relation,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Formula {
    Pred(Predicate),
    Not(Box<Formula>),
    /// N-ary conjunction; the empty conjunction is `true`.
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Finally(Interval, Box<Formula>),
    Globally(Interval, Box<Formula>),
    Until(Interval, Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn inside(name: &str) -> Self {
        Formula::Pred(Predicate::Region {
            name: name.to_string(),
            inside: true,
        })
    }

    pub fn affine(coeffs: [f64; 2], offset: f64, rel: Relation) -> Self {
        Formula::Pred(Predicate::Affine {
            coeffs,
            offset,
            rel,
        })
    }

    pub fn finally(lo: f64, hi: f64, f: Formula) -> Self {
        Formula::Finally(Interval { lo, hi }, Box::new(f))
    }

    pub fn globally(lo: f64, hi: f64, f: Formula) -> Self {
        Formula::Globally(Interval { lo, hi }, Box::new(f))
    }

    pub fn until(lo: f64, hi: f64, lhs: Formula, rhs: Formula) -> Self {
        Formula::Until(Interval { lo, hi }, Box::new(lhs), Box::new(rhs))
    }

    pub fn children(&self) -> Vec<&Formula> {
        match self {
            Formula::Pred(_) => vec![],
            Formula::Not(f) | Formula::Finally(_, f) | Formula::Globally(_, f) => vec![f],
            Formula::And(fs) | Formula::Or(fs) => fs.iter().collect(),
            Formula::Until(_, a, b) => vec![a, b],
        }
    }

    /// Number of future time units needed to decide the formula.
    pub fn horizon(&self) -> f64 {
        match self {
            Formula::Pred(_) => 0.0,
            Formula::Not(f) => f.horizon(),
            Formula::And(fs) | Formula::Or(fs) => {
                fs.iter().map(Formula::horizon).fold(0.0, f64::max)
            }
            Formula::Finally(i, f) | Formula::Globally(i, f) => i.hi + f.horizon(),
            Formula::Until(i, a, b) => i.hi + a.horizon().max(b.horizon()),
        }
    }

    /// Region names referenced anywhere in the formula, in first-seen order.
    pub fn region_names(&self) -> Vec<String> {
        fn walk(f: &Formula, out: &mut Vec<String>) {
            if let Formula::Pred(Predicate::Region { name, .. }) = f {
                if !out.contains(name) {
                    out.push(name.clone());
                }
            }
            for c in f.children() {
                walk(c, out);
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out
    }

    pub fn depth(&self) -> usize {
        1 + self.children().iter().map(|c| c.depth()).max().unwrap_or(0)
    }

    fn is_junction(&self) -> bool {
        matches!(self, Formula::And(_) | Formula::Or(_))
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, op: &Formula) -> fmt::Result {
    if op.is_junction() {
        write!(f, "({op})")
    } else {
        write!(f, "{op}")
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.lo, self.hi)
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Predicate::Region { name, inside: true } => write!(f, "in({name})"),
            Predicate::Region {
                name,
                inside: false,
            } => write!(f, "out({name})"),
            Predicate::Affine {
                coeffs,
                offset,
                rel,
            } => {
                let signed = |v: f64| {
                    if v.is_sign_negative() {
                        format!("- {}", -v)
                    } else {
                        format!("+ {v}")
                    }
                };
                let rel = match rel {
                    Relation::Ge => ">=",
                    Relation::Le => "<=",
                };
                write!(
                    f,
                    "{}*x1 {}*x2 {} {rel} 0",
                    coeffs[0],
                    signed(coeffs[1]),
                    signed(*offset)
                )
            }
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Pred(p) => write!(f, "{p}"),
            Formula::Not(inner) => {
                write!(f, "!")?;
                write_operand(f, inner)
            }
            Formula::And(fs) | Formula::Or(fs) => {
                let sep = if matches!(self, Formula::And(_)) {
                    " & "
                } else {
                    " | "
                };
                for (i, c) in fs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(sep)?;
                    }
                    write_operand(f, c)?;
                }
                Ok(())
            }
            Formula::Finally(i, inner) => {
                write!(f, "F{i} ")?;
                write_operand(f, inner)
            }
            Formula::Globally(i, inner) => {
                write!(f, "G{i} ")?;
                write_operand(f, inner)
            }
            Formula::Until(i, a, b) => write!(f, "U{i}({a}, {b})"),
        }
    }
}
