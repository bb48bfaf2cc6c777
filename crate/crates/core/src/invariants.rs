//! Arithmetic and rule-based existence criteria for Parseval frames of
//! vector bundles: size bounds, lens-space stable parallelizability, size
//! `d+1` frames of tangent bundles, and generic sections over 4-manifolds.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Field;
use crate::spectral::ManifoldFlags;

/// Largest number of tuples [`lens_search`] will enumerate.
pub const LENS_SEARCH_CAP: u64 = 10_000_000;

#[derive(Debug, Error, PartialEq)]
pub enum InvariantError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("{0} is not an odd prime")]
    NotOddPrime(u64),
    #[error("search needs {tuples} tuples, over the cap of {cap}")]
    SearchBudgetExceeded { tuples: u128, cap: u64 },
    #[error("inconsistent descriptor: {0}")]
    InconsistentDescriptor(String),
}

impl InvariantError {
    pub fn kind(&self) -> &'static str {
        match self {
            InvariantError::Domain(_) => "DomainError",
            InvariantError::NotOddPrime(_) => "NotOddPrime",
            InvariantError::SearchBudgetExceeded { .. } => "SearchBudgetExceeded",
            InvariantError::InconsistentDescriptor(_) => "InconsistentDescriptor",
        }
    }
}

pub fn is_odd_prime(p: u64) -> bool {
    if p < 3 || p % 2 == 0 {
        return false;
    }
    let mut d = 3;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

fn pow_mod(base: u64, mut exp: u64, m: u64) -> u64 {
    let m128 = m as u128;
    let mut acc = 1u128 % m128;
    let mut b = base as u128 % m128;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % m128;
        }
        b = b * b % m128;
        exp >>= 1;
    }
    acc as u64
}

/// `L(p, b)`: the quotient of `S^{2n+1}` by `Z/p` acting with weights `b = (b₀, …, b_n)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LensSpace {
    p: u64,
    b: Vec<u64>,
}

impl LensSpace {
    pub fn new(p: u64, b: Vec<u64>) -> Result<Self, InvariantError> {
        if !is_odd_prime(p) {
            return Err(InvariantError::NotOddPrime(p));
        }
        if b.is_empty() {
            return Err(InvariantError::Domain("weight tuple must be non-empty".into()));
        }
        if let Some(&bad) = b.iter().find(|&&x| x == 0 || x >= p) {
            return Err(InvariantError::Domain(format!("weight {bad} outside 1..={}", p - 1)));
        }
        Ok(Self { p, b })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn weights(&self) -> &[u64] {
        &self.b
    }

    /// `n`, one less than the number of weights.
    pub fn n(&self) -> usize {
        self.b.len() - 1
    }

    pub fn dimension(&self) -> usize {
        2 * self.n() + 1
    }
}

/// `n < p` and `Σ b_i^{2j} ≡ 0 (mod p)` for every `1 ≤ j ≤ ⌊n/2⌋`.
pub fn lens_stably_parallelizable(lens: &LensSpace) -> bool {
    let (p, n) = (lens.p, lens.n());
    if n as u64 >= p {
        return false;
    }
    (1..=n / 2).all(|j| lens.b.iter().map(|&x| pow_mod(x, 2 * j as u64, p)).sum::<u64>() % p == 0)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LensReport {
    pub p: u64,
    pub b: Vec<u64>,
    pub dimension: usize,
    pub stably_parallelizable: bool,
    /// `Σ b_i^{2j} mod p` for `j = 1, …, ⌊n/2⌋`.
    pub power_sums: Vec<u64>,
    pub reasons: Vec<String>,
}

pub fn lens_report(lens: &LensSpace) -> LensReport {
    let (p, n) = (lens.p, lens.n());
    let power_sums: Vec<u64> =
        (1..=n / 2).map(|j| lens.b.iter().map(|&x| pow_mod(x, 2 * j as u64, p)).sum::<u64>() % p).collect();
    let mut reasons = Vec::new();
    if n as u64 >= p {
        reasons.push(format!("n = {n} is not below p = {p}"));
    } else {
        reasons.push(format!("n = {n} < p = {p}"));
        if power_sums.is_empty() {
            reasons.push("no power-sum congruences for n < 2".into());
        }
        for (j, s) in power_sums.iter().enumerate() {
            let rel = if *s == 0 { "≡" } else { "≢" };
            reasons.push(format!("sum of b_i^{} ≡ {s} {rel} 0 (mod {p})", 2 * (j + 1)));
        }
    }
    LensReport {
        p,
        b: lens.b.clone(),
        dimension: lens.dimension(),
        stably_parallelizable: lens_stably_parallelizable(lens),
        power_sums,
        reasons,
    }
}

/// First weight tuple in lexicographic order over `{1, …, p−1}^{n+1}` whose
/// lens space is stably parallelizable.
pub fn lens_search(p: u64, n: usize) -> Result<Option<LensSpace>, InvariantError> {
    lens_search_with_cap(p, n, LENS_SEARCH_CAP)
}

pub fn lens_search_with_cap(p: u64, n: usize, cap: u64) -> Result<Option<LensSpace>, InvariantError> {
    if !is_odd_prime(p) {
        return Err(InvariantError::NotOddPrime(p));
    }
    if n == 0 {
        return Err(InvariantError::Domain("n must be at least 1".into()));
    }
    if n as u64 >= p {
        return Ok(None);
    }
    let tuples = (p as u128 - 1).checked_pow(n as u32 + 1).unwrap_or(u128::MAX);
    if tuples > cap as u128 {
        return Err(InvariantError::SearchBudgetExceeded { tuples, cap });
    }
    let mut b = vec![1u64; n + 1];
    loop {
        let lens = LensSpace { p, b: b.clone() };
        if lens_stably_parallelizable(&lens) {
            return Ok(Some(lens));
        }
        // odometer, last coordinate fastest
        let mut pos = n + 1;
        loop {
            if pos == 0 {
                return Ok(None);
            }
            pos -= 1;
            if b[pos] + 1 < p {
                b[pos] += 1;
                break;
            }
            b[pos] = 1;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsevalBound {
    pub d: usize,
    pub k: usize,
    pub field: Field,
    /// A frame size that always suffices for a rank-k bundle over a d-manifold.
    pub n: usize,
    /// `2d − 1`, sufficient for the real tangent bundle of a d-manifold with d ≥ 2.
    pub tangent_sharpened: Option<usize>,
}

pub fn parseval_size_bound(d: usize, k: usize, field: Field) -> Result<ParsevalBound, InvariantError> {
    if k == 0 {
        return Err(InvariantError::Domain("bundle rank k must be at least 1".into()));
    }
    let n = match field {
        Field::Real => d + k,
        Field::Complex => d / 2 + k,
    };
    let tangent_sharpened = (field == Field::Real && k == d && d >= 2).then(|| 2 * d - 1);
    Ok(ParsevalBound { d, k, field, n, tangent_sharpened })
}

/// What is known about a manifold. Unset optional flags mean unknown.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldDescriptor {
    pub dim: usize,
    #[serde(default)]
    pub orientable: bool,
    #[serde(default)]
    pub stably_parallelizable: Option<bool>,
    #[serde(default)]
    pub h1_z2_trivial: Option<bool>,
    #[serde(default)]
    pub w2_zero: Option<bool>,
    #[serde(default)]
    pub p1_zero: Option<bool>,
    #[serde(default)]
    pub homology_sphere: bool,
    /// Compact without boundary, for `dim = 2`.
    #[serde(default)]
    pub closed_surface: bool,
    #[serde(default)]
    pub betti: Option<Vec<u64>>,
}

impl ManifoldDescriptor {
    pub fn new(dim: usize) -> Self {
        Self { dim, ..Default::default() }
    }

    /// `CPⁿ`, stably parallelizable only for `n = 1`.
    pub fn complex_projective(n: usize) -> Self {
        Self {
            dim: 2 * n,
            orientable: true,
            stably_parallelizable: Some(n == 1),
            h1_z2_trivial: Some(true),
            w2_zero: Some(n % 2 == 1),
            p1_zero: (n == 2).then_some(false),
            homology_sphere: n == 1,
            closed_surface: n == 1,
            betti: Some((0..=2 * n).map(|i| u64::from(i % 2 == 0)).collect()),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Existence {
    Exists,
    NotExists,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rule {
    StablyParallelizable,
    OrientableClosedSurface,
    Orientable3Manifold,
    Spin4ManifoldP1Zero,
    HomologySphere,
    NotStablyParallelizableH1Trivial,
}

impl Rule {
    pub fn verdict(self) -> Existence {
        match self {
            Rule::NotStablyParallelizableH1Trivial => Existence::NotExists,
            _ => Existence::Exists,
        }
    }

    pub fn reason(self) -> &'static str {
        match self {
            Rule::StablyParallelizable => {
                "TM plus a trivial line bundle is trivial, so TM is a direct summand of a rank d+1 trivial bundle"
            }
            Rule::OrientableClosedSurface => "an orientable closed surface embeds in R^3 with trivial normal bundle",
            Rule::Orientable3Manifold => "every orientable 3-manifold is parallelizable",
            Rule::Spin4ManifoldP1Zero => {
                "an orientable 4-manifold with w2 = 0 and p1 = 0 is stably parallelizable"
            }
            Rule::HomologySphere => "homology spheres are stably parallelizable",
            Rule::NotStablyParallelizableH1Trivial => {
                "with H1(M; Z/2) = 0 a size d+1 Parseval frame forces stable parallelizability, which fails"
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decision {
    pub verdict: Existence,
    pub rules: Vec<Rule>,
    pub reasons: Vec<String>,
}

fn check_betti(betti: &[u64], dim: usize) -> Result<(), InvariantError> {
    if betti.len() != dim + 1 {
        return Err(InvariantError::InconsistentDescriptor(format!(
            "{} Betti numbers for a {dim}-manifold",
            betti.len()
        )));
    }
    Ok(())
}

/// Whether the tangent bundle admits a Parseval frame of size `dim + 1`.
/// All applicable rules are collected; rules with opposite verdicts make the
/// descriptor inconsistent.
pub fn decide_d_plus_1(m: &ManifoldDescriptor) -> Result<Decision, InvariantError> {
    let bad = |msg: &str| Err(InvariantError::InconsistentDescriptor(msg.into()));
    if m.dim == 0 {
        return bad("dim must be at least 1");
    }
    if m.closed_surface && m.dim != 2 {
        return bad("closed_surface requires dim = 2");
    }
    if m.homology_sphere && m.h1_z2_trivial == Some(false) {
        return bad("a homology sphere has H1(M; Z/2) = 0");
    }
    if let Some(betti) = &m.betti {
        check_betti(betti, m.dim)?;
        let b1 = betti.get(1).copied().unwrap_or(0);
        if m.dim >= 2 && b1 > 0 && m.h1_z2_trivial == Some(true) {
            return bad("b1 > 0 contradicts H1(M; Z/2) = 0");
        }
        if m.homology_sphere && betti.iter().enumerate().any(|(i, &b)| b != u64::from(i == 0 || i == m.dim)) {
            return bad("a homology sphere has the Betti numbers of a sphere");
        }
    }

    let mut rules = Vec::new();
    if m.stably_parallelizable == Some(true) {
        rules.push(Rule::StablyParallelizable);
    }
    if m.dim == 2 && m.orientable && m.closed_surface {
        rules.push(Rule::OrientableClosedSurface);
    }
    if m.dim == 3 && m.orientable {
        rules.push(Rule::Orientable3Manifold);
    }
    if m.dim == 4 && m.orientable && m.w2_zero == Some(true) && m.p1_zero == Some(true) {
        rules.push(Rule::Spin4ManifoldP1Zero);
    }
    if m.homology_sphere {
        rules.push(Rule::HomologySphere);
    }
    if m.stably_parallelizable == Some(false) && m.h1_z2_trivial == Some(true) {
        rules.push(Rule::NotStablyParallelizableH1Trivial);
    }

    // every Exists rule implies stable parallelizability
    if let (Some(r), Some(false)) =
        (rules.iter().find(|r| r.verdict() == Existence::Exists), m.stably_parallelizable)
    {
        return Err(InvariantError::InconsistentDescriptor(format!(
            "stably_parallelizable = false contradicts: {}",
            r.reason()
        )));
    }
    let verdict = rules.first().map_or(Existence::Unknown, |r| r.verdict());
    let mut reasons: Vec<String> = rules.iter().map(|r| r.reason().to_string()).collect();
    if rules.is_empty() {
        reasons.push("no rule applies to the known flags".into());
    }
    Ok(Decision { verdict, rules, reasons })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GenericVerdict {
    /// No bundle frame of the tangent bundle is i-generic everywhere, for any i.
    NoIGenericSections,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenericObstruction {
    pub euler_characteristic: i64,
    pub verdict: GenericVerdict,
    /// Flags for the cover-based obstruction, when they are determined.
    pub flags: Option<ManifoldFlags>,
    pub reasons: Vec<String>,
}

/// Generic-section obstruction for a closed 4-manifold from its Betti numbers.
pub fn generic_obstruction_4mfld(
    betti: &[u64],
    simply_connected: bool,
    orientable_known: Option<bool>,
) -> Result<GenericObstruction, InvariantError> {
    let bad = |msg: String| Err(InvariantError::InconsistentDescriptor(msg));
    if betti.len() != 5 {
        return bad(format!("expected 5 Betti numbers, got {}", betti.len()));
    }
    let chi: i64 = betti.iter().enumerate().map(|(i, &b)| if i % 2 == 0 { b as i64 } else { -(b as i64) }).sum();
    let mut reasons = vec![format!("Euler characteristic = alternating sum of Betti numbers = {chi}")];
    if !simply_connected {
        reasons.push("not known to be simply connected: H1(M; Z/2) = 0 is not established".into());
        return Ok(GenericObstruction { euler_characteristic: chi, verdict: GenericVerdict::Unknown, flags: None, reasons });
    }
    if betti[0] != 1 || betti[1] != 0 {
        return bad("a simply connected manifold has b0 = 1 and b1 = 0".into());
    }
    if betti[3] != 0 || betti[4] != 1 {
        return bad("Poincaré duality for a closed simply connected 4-manifold forces b3 = 0 and b4 = 1".into());
    }
    if orientable_known == Some(false) {
        return bad("a simply connected manifold is orientable".into());
    }
    let flags = ManifoldFlags { euler_nonzero: chi != 0, h1_z2_trivial: true };
    reasons.push("simply connected, so H1(M; Z/2) = 0 and the spectral double cover of any simple eigenvalue is trivial".into());
    let verdict = if chi != 0 {
        reasons.push("a trivial cover gives a nowhere-zero tangent field, impossible with non-zero Euler class".into());
        GenericVerdict::NoIGenericSections
    } else {
        reasons.push("Euler characteristic vanishes: no obstruction".into());
        GenericVerdict::Unknown
    };
    Ok(GenericObstruction { euler_characteristic: chi, verdict, flags: Some(flags), reasons })
}
