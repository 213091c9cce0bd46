//! 3-SAT instances in conjunctive normal form.
//!
//! Parsing and emission use DIMACS CNF. Every clause holds exactly three
//! literals over three distinct variables; degenerate clauses (repeated
//! variables, tautologies) are rejected instead of being simplified.

use std::fmt;

use num_rational::Ratio;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest variable count [`brute_force_sat`] will enumerate.
pub const MAX_ENUMERATION_VARS: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CnfError {
    #[error("line {line}: malformed problem line: {reason}")]
    MalformedHeader { line: usize, reason: String },
    #[error("missing `p cnf <vars> <clauses>` problem line")]
    MissingHeader,
    #[error("line {line}: duplicate problem line")]
    DuplicateHeader { line: usize },
    #[error("line {line}: invalid literal token `{token}`")]
    InvalidToken { line: usize, token: String },
    #[error("line {line}: clause has {found} literals, expected 3")]
    ClauseArity { line: usize, found: usize },
    #[error("line {line}: variable {variable} out of range 1..={num_vars}")]
    VariableOutOfRange {
        line: usize,
        variable: u32,
        num_vars: usize,
    },
    #[error("line {line}: clause repeats variable {variable}")]
    RepeatedVariable { line: usize, variable: u32 },
    #[error("line {line}: clause is a tautology on variable {variable}")]
    Tautology { line: usize, variable: u32 },
    #[error("line {line}: clause not terminated by 0")]
    UnterminatedClause { line: usize },
    #[error("header declares {declared} clauses but {found} were read")]
    ClauseCountMismatch { declared: usize, found: usize },
    #[error("instance must have at least one variable and one clause")]
    Empty,
    #[error("variable index must be at least 1")]
    ZeroVariable,
    #[error("{num_vars} variables exceeds the enumeration limit of {limit}")]
    TooManyVariables { num_vars: usize, limit: usize },
    #[error("random instances need at least 3 variables, got {0}")]
    TooFewVariables(usize),
}

/// A possibly negated boolean variable. Variables are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Literal {
    variable: u32,
    negated: bool,
}

impl Literal {
    pub fn new(variable: u32, negated: bool) -> Result<Self, CnfError> {
        if variable == 0 {
            return Err(CnfError::ZeroVariable);
        }
        Ok(Literal { variable, negated })
    }

    pub fn pos(variable: u32) -> Self {
        Self::new(variable, false).expect("variable must be >= 1")
    }

    pub fn neg(variable: u32) -> Self {
        Self::new(variable, true).expect("variable must be >= 1")
    }

    /// Builds a literal from a signed DIMACS integer (`-6` is `¬x6`).
    pub fn from_dimacs(value: i32) -> Result<Self, CnfError> {
        Self::new(value.unsigned_abs(), value < 0)
    }

    pub fn to_dimacs(self) -> i64 {
        if self.negated {
            -(self.variable as i64)
        } else {
            self.variable as i64
        }
    }

    pub fn variable(self) -> u32 {
        self.variable
    }

    pub fn is_negated(self) -> bool {
        self.negated
    }

    /// Zero-based index into an [`Assignment`].
    pub fn index(self) -> usize {
        self.variable as usize - 1
    }

    /// True when `other` is the complement of this literal.
    pub fn conflicts_with(self, other: Literal) -> bool {
        self.variable == other.variable && self.negated != other.negated
    }

    pub fn eval(self, assignment: &Assignment) -> bool {
        assignment.value(self.variable) != self.negated
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

/// Exactly three literals over three distinct variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "[Literal; 3]", into = "[Literal; 3]")]
pub struct Clause([Literal; 3]);

impl Clause {
    pub fn new(literals: [Literal; 3]) -> Result<Self, CnfError> {
        Self::checked(literals, 0)
    }

    fn checked(literals: [Literal; 3], line: usize) -> Result<Self, CnfError> {
        for i in 0..3 {
            for j in (i + 1)..3 {
                let (a, b) = (literals[i], literals[j]);
                if a.variable == b.variable {
                    return Err(if a.negated != b.negated {
                        CnfError::Tautology {
                            line,
                            variable: a.variable,
                        }
                    } else {
                        CnfError::RepeatedVariable {
                            line,
                            variable: a.variable,
                        }
                    });
                }
            }
        }
        Ok(Clause(literals))
    }

    /// Convenience constructor from signed DIMACS integers.
    pub fn from_dimacs(values: [i32; 3]) -> Result<Self, CnfError> {
        let lits = [
            Literal::from_dimacs(values[0])?,
            Literal::from_dimacs(values[1])?,
            Literal::from_dimacs(values[2])?,
        ];
        Self::new(lits)
    }

    pub fn literals(&self) -> &[Literal; 3] {
        &self.0
    }

    pub fn is_satisfied(&self, assignment: &Assignment) -> bool {
        self.0.iter().any(|l| l.eval(assignment))
    }
}

impl TryFrom<[Literal; 3]> for Clause {
    type Error = CnfError;

    fn try_from(value: [Literal; 3]) -> Result<Self, Self::Error> {
        Clause::new(value)
    }
}

impl From<Clause> for [Literal; 3] {
    fn from(value: Clause) -> Self {
        value.0
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c] = self.0;
        write!(f, "({a} ∨ {b} ∨ {c})")
    }
}

/// A 3-SAT instance: `n` variables and an ordered, non-empty clause list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cnf {
    num_vars: usize,
    clauses: Vec<Clause>,
}

impl Cnf {
    pub fn new(num_vars: usize, clauses: Vec<Clause>) -> Result<Self, CnfError> {
        if num_vars == 0 || clauses.is_empty() {
            return Err(CnfError::Empty);
        }
        for clause in &clauses {
            for lit in clause.literals() {
                if lit.variable as usize > num_vars {
                    return Err(CnfError::VariableOutOfRange {
                        line: 0,
                        variable: lit.variable,
                        num_vars,
                    });
                }
            }
        }
        Ok(Cnf { num_vars, clauses })
    }

    /// Builds an instance from signed DIMACS triples; panics on invalid input.
    /// Intended for literals in tests and built-in suites.
    pub fn from_triples(num_vars: usize, triples: &[[i32; 3]]) -> Self {
        let clauses = triples
            .iter()
            .map(|t| Clause::from_dimacs(*t).expect("invalid clause"))
            .collect();
        Cnf::new(num_vars, clauses).expect("invalid instance")
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    /// Clause-to-variable ratio `m / n`, reduced.
    pub fn density(&self) -> Ratio<u64> {
        Ratio::new(self.clauses.len() as u64, self.num_vars as u64)
    }

    pub fn is_satisfied_by(&self, assignment: &Assignment) -> bool {
        verify_assignment(self, assignment)
    }

    /// DIMACS text: problem line followed by one `0`-terminated clause per line.
    pub fn to_dimacs(&self) -> String {
        let mut out = format!("p cnf {} {}\n", self.num_vars, self.clauses.len());
        for clause in &self.clauses {
            let [a, b, c] = *clause.literals();
            out.push_str(&format!("{a} {b} {c} 0\n"));
        }
        out
    }
}

impl fmt::Display for Cnf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, clause) in self.clauses.iter().enumerate() {
            if i > 0 {
                write!(f, " ∧ ")?;
            }
            write!(f, "{clause}")?;
        }
        Ok(())
    }
}

/// Truth value per variable; index 0 holds variable 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Assignment(Vec<bool>);

impl Assignment {
    pub fn new(values: Vec<bool>) -> Self {
        Assignment(values)
    }

    pub fn all_false(num_vars: usize) -> Self {
        Assignment(vec![false; num_vars])
    }

    /// Decodes bit `i` of `bits` as the value of variable `i + 1`.
    pub fn from_bits(bits: u64, num_vars: usize) -> Self {
        Assignment((0..num_vars).map(|i| bits >> i & 1 == 1).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Value of the 1-based `variable`.
    pub fn value(&self, variable: u32) -> bool {
        self.0[variable as usize - 1]
    }

    pub fn set(&mut self, variable: u32, value: bool) {
        self.0[variable as usize - 1] = value;
    }

    pub fn values(&self) -> &[bool] {
        &self.0
    }
}

/// Parses DIMACS CNF text.
///
/// Accepts `c` comment lines, a single `p cnf <n> <m>` line, and clauses
/// as whitespace-separated signed integers terminated by `0` (a clause may
/// span lines). A line starting with `%` ends the clause section, as in the
/// SATLIB uniform random sets.
pub fn parse_dimacs(text: &str) -> Result<Cnf, CnfError> {
    let mut header: Option<(usize, usize)> = None;
    let mut clauses = Vec::new();
    let mut pending: Vec<Literal> = Vec::new();
    let mut pending_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if line.starts_with('%') {
            break;
        }
        if line.starts_with('p') {
            if header.is_some() {
                return Err(CnfError::DuplicateHeader { line: line_no });
            }
            header = Some(parse_header(line, line_no)?);
            continue;
        }
        let (num_vars, _) = header.ok_or(CnfError::MissingHeader)?;
        for token in line.split_whitespace() {
            let value: i32 = token.parse().map_err(|_| CnfError::InvalidToken {
                line: line_no,
                token: token.to_string(),
            })?;
            if pending.is_empty() {
                pending_line = line_no;
            }
            if value == 0 {
                if pending.len() != 3 {
                    return Err(CnfError::ClauseArity {
                        line: line_no,
                        found: pending.len(),
                    });
                }
                let lits = [pending[0], pending[1], pending[2]];
                clauses.push(Clause::checked(lits, line_no)?);
                pending.clear();
                continue;
            }
            let lit = Literal::from_dimacs(value)?;
            if lit.variable as usize > num_vars {
                return Err(CnfError::VariableOutOfRange {
                    line: line_no,
                    variable: lit.variable,
                    num_vars,
                });
            }
            if pending.len() == 3 {
                return Err(CnfError::ClauseArity {
                    line: line_no,
                    found: 4,
                });
            }
            pending.push(lit);
        }
    }

    if !pending.is_empty() {
        return Err(CnfError::UnterminatedClause { line: pending_line });
    }
    let (num_vars, declared) = header.ok_or(CnfError::MissingHeader)?;
    if declared != clauses.len() {
        return Err(CnfError::ClauseCountMismatch {
            declared,
            found: clauses.len(),
        });
    }
    Cnf::new(num_vars, clauses)
}

fn parse_header(line: &str, line_no: usize) -> Result<(usize, usize), CnfError> {
    let malformed = |reason: &str| CnfError::MalformedHeader {
        line: line_no,
        reason: reason.to_string(),
    };
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != 4 || fields[0] != "p" || fields[1] != "cnf" {
        return Err(malformed("expected `p cnf <vars> <clauses>`"));
    }
    let n: usize = fields[2]
        .parse()
        .map_err(|_| malformed("variable count is not a non-negative integer"))?;
    let m: usize = fields[3]
        .parse()
        .map_err(|_| malformed("clause count is not a non-negative integer"))?;
    if n == 0 || m == 0 {
        return Err(malformed("variable and clause counts must be positive"));
    }
    Ok((n, m))
}

/// True iff every clause has at least one true literal.
pub fn verify_assignment(cnf: &Cnf, assignment: &Assignment) -> bool {
    assignment.len() == cnf.num_vars && cnf.clauses.iter().all(|c| c.is_satisfied(assignment))
}

/// Exhaustive search in binary order (variable 1 is the least significant
/// bit). Returns the first satisfying assignment, or `None` if the instance
/// is unsatisfiable.
pub fn brute_force_sat(cnf: &Cnf) -> Result<Option<Assignment>, CnfError> {
    let n = cnf.num_vars;
    if n > MAX_ENUMERATION_VARS {
        return Err(CnfError::TooManyVariables {
            num_vars: n,
            limit: MAX_ENUMERATION_VARS,
        });
    }
    // (positive mask, negative mask) per clause
    let masks: Vec<(u64, u64)> = cnf
        .clauses
        .iter()
        .map(|c| {
            c.literals().iter().fold((0u64, 0u64), |(p, q), l| {
                let bit = 1u64 << l.index();
                if l.negated {
                    (p, q | bit)
                } else {
                    (p | bit, q)
                }
            })
        })
        .collect();
    let full = (1u64 << n) - 1;
    for bits in 0..=full {
        let negated = !bits & full;
        if masks
            .iter()
            .all(|&(p, q)| bits & p != 0 || negated & q != 0)
        {
            return Ok(Some(Assignment::from_bits(bits, n)));
        }
    }
    Ok(None)
}

/// Uniform random 3-SAT: each clause draws 3 distinct variables and
/// independent fair polarities. Deterministic per `seed`.
pub fn random_3sat(num_vars: usize, num_clauses: usize, seed: u64) -> Result<Cnf, CnfError> {
    if num_vars < 3 {
        return Err(CnfError::TooFewVariables(num_vars));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let clauses = (0..num_clauses)
        .map(|_| {
            let vars = index::sample(&mut rng, num_vars, 3);
            let mut lits = [Literal::pos(1); 3];
            for (slot, v) in lits.iter_mut().zip(vars.iter()) {
                *slot = Literal {
                    variable: v as u32 + 1,
                    negated: rng.random_bool(0.5),
                };
            }
            Clause(lits)
        })
        .collect();
    Cnf::new(num_vars, clauses)
}
