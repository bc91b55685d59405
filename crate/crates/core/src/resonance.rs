//! Integer spectra, the resonance semigroup `M_λ = {k ≥ 0 : k·λ = 0}` and
//! resonant-monomial queries. All indices are 0-based.

use num::rational::BigRational;
use num::{ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::multidegree::Multidegree;
use crate::scalar::{gcd, lcm, GaussianRational, C64};

/// Integer eigenvalues `(λ₁,…,λₙ)` with `gcd(|λ_j|) = 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Spectrum {
    lambda: Vec<i64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SignProfile {
    pub negative: usize,
    pub zero: usize,
    pub positive: usize,
}

impl Spectrum {
    /// Divides out the gcd; the all-zero vector is rejected.
    pub fn new(lambda: Vec<i64>) -> Result<Self> {
        if lambda.is_empty() {
            return Err(Error::Spectrum("empty spectrum".into()));
        }
        let g = lambda.iter().fold(0, |g, &l| gcd(g, l));
        if g == 0 {
            return Err(Error::Spectrum("all eigenvalues vanish".into()));
        }
        Ok(Self {
            lambda: lambda.into_iter().map(|l| l / g).collect(),
        })
    }

    pub fn from_rationals(values: &[BigRational]) -> Result<Self> {
        let den = values
            .iter()
            .map(|v| v.denom().to_i64().ok_or_else(|| Error::Spectrum("denominator too large".into())))
            .try_fold(1i64, |acc, d| d.map(|d| lcm(acc, d)))?;
        let ints = values
            .iter()
            .map(|v| {
                (v * BigRational::from_integer(den.into()))
                    .to_integer()
                    .to_i64()
                    .ok_or_else(|| Error::Spectrum("eigenvalue too large".into()))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(ints)
    }

    /// Eigenvalues in ℚ(i) proportional to a real rational vector. A common
    /// complex factor is divided out (the direction of the first nonzero
    /// entry); real input keeps its signs.
    pub fn from_exact(values: &[GaussianRational]) -> Result<Self> {
        if values.iter().all(GaussianRational::is_real) {
            return Self::from_rationals(&values.iter().map(|v| v.re.clone()).collect::<Vec<_>>());
        }
        let mu = values
            .iter()
            .find(|v| !(v.re.is_zero() && v.im.is_zero()))
            .ok_or_else(|| Error::Spectrum("all eigenvalues vanish".into()))?;
        let ratios = values
            .iter()
            .map(|v| {
                let r = v / mu;
                if r.is_real() {
                    Ok(r.re)
                } else {
                    Err(Error::Spectrum(format!(
                        "eigenvalue ratio {r} is not real: no common complex factor"
                    )))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_rationals(&ratios)
    }

    /// Float eigenvalues, matched to small rationals (denominators ≤ 1000,
    /// tolerance 1e−9 relative to the largest modulus).
    pub fn from_floats(values: &[C64]) -> Result<Self> {
        let scale = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return Err(Error::Spectrum("all eigenvalues vanish".into()));
        }
        let all_real = values.iter().all(|v| v.im.abs() <= 1e-9 * scale);
        let mu = if all_real {
            C64::new(1.0, 0.0)
        } else {
            *values.iter().find(|v| v.norm() > 1e-9 * scale).unwrap()
        };
        let mut rats = Vec::with_capacity(values.len());
        for v in values {
            let r = v / mu;
            let unit = scale / mu.norm();
            if r.im.abs() > 1e-9 * unit {
                return Err(Error::Spectrum(format!("eigenvalue ratio {r} is not real")));
            }
            let (p, q) = rational_approx(r.re / unit, 1000)
                .filter(|&(p, q)| ((p as f64 / q as f64) - r.re / unit).abs() <= 1e-9)
                .ok_or_else(|| Error::Spectrum(format!("eigenvalue ratio {} is not a small rational", r.re)))?;
            rats.push(BigRational::new(p.into(), q.into()));
        }
        Self::from_rationals(&rats)
    }

    pub fn values(&self) -> &[i64] {
        &self.lambda
    }

    pub fn n(&self) -> usize {
        self.lambda.len()
    }

    pub fn get(&self, j: usize) -> i64 {
        self.lambda[j]
    }

    pub fn sign_profile(&self) -> SignProfile {
        SignProfile {
            negative: self.lambda.iter().filter(|&&l| l < 0).count(),
            zero: self.lambda.iter().filter(|&&l| l == 0).count(),
            positive: self.lambda.iter().filter(|&&l| l > 0).count(),
        }
    }

    pub fn negated(&self) -> Self {
        Self {
            lambda: self.lambda.iter().map(|l| -l).collect(),
        }
    }

    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self {
            lambda: perm.iter().map(|&i| self.lambda[i]).collect(),
        }
    }

    /// Eigenvalues as exact coefficients.
    pub fn as_exact(&self) -> Vec<GaussianRational> {
        self.lambda
            .iter()
            .map(|&l| GaussianRational::from_real(BigRational::from_integer(l.into())))
            .collect()
    }

    pub fn as_float(&self) -> Vec<C64> {
        self.lambda.iter().map(|&l| C64::new(l as f64, 0.0)).collect()
    }
}

/// Best rational approximation with denominator at most `max_den`, by
/// continued fractions.
pub fn rational_approx(x: f64, max_den: i64) -> Option<(i64, i64)> {
    if !x.is_finite() {
        return None;
    }
    let (mut p0, mut q0, mut p1, mut q1) = (0i64, 1i64, 1i64, 0i64);
    let mut v = x;
    for _ in 0..64 {
        let a = v.floor();
        if a.abs() > 1e15 {
            break;
        }
        let a = a as i64;
        let (p2, q2) = (a.checked_mul(p1)?.checked_add(p0)?, a.checked_mul(q1)?.checked_add(q0)?);
        if q2 > max_den {
            break;
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        let frac = v - a as f64;
        if frac.abs() < 1e-12 {
            break;
        }
        v = 1.0 / frac;
    }
    (q1 != 0).then_some((p1, q1))
}

/// Generators of `M_λ` found by exhaustive search.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResonanceLattice {
    pub lambda: Vec<i64>,
    pub generators: Vec<Multidegree>,
    pub rank: usize,
    pub search_bound: u32,
    /// Every enumerated member decomposes over the generators and the bound
    /// is at least twice the largest generator degree. A heuristic, bound
    /// dependent certificate.
    pub complete_under_bound: bool,
}

/// All `k` with `1 ≤ |k| ≤ bound` and `k·λ = 0`, the minimal ones among them
/// (no other member lies below componentwise), and the rank they span.
pub fn resonance_lattice(spectrum: &Spectrum, bound: u32) -> Result<ResonanceLattice> {
    if bound < 1 {
        return Err(Error::InvalidArgument("search bound must be at least 1".into()));
    }
    let lambda = spectrum.values();
    let n = lambda.len();
    let members: Vec<Multidegree> = Multidegree::up_to(n, 1, bound)
        .into_iter()
        .filter(|k| k.dot(lambda) == 0)
        .collect();
    let generators: Vec<Multidegree> = members
        .iter()
        .filter(|k| !members.iter().any(|m| m != *k && m.divides(k)))
        .cloned()
        .collect();

    let decomposes = members.iter().all(|k| decomposes_over(k, &generators));
    let max_deg = generators.iter().map(Multidegree::total).max().unwrap_or(0);
    let p = spectrum.sign_profile();
    let mixed = p.zero > 0 || (p.negative > 0 && p.positive > 0);
    let complete_under_bound = if generators.is_empty() {
        // Same-sign spectra have M_λ = {0}; otherwise a member must exist.
        !mixed
    } else {
        decomposes && bound >= 2 * max_deg
    };

    let rank = if generators.is_empty() {
        0
    } else {
        Matrix::from_rows(
            generators
                .iter()
                .map(|g| g.exps().map(|e| GaussianRational::from_real(BigRational::from_integer(e.into()))).collect())
                .collect(),
        )?
        .rank()
    };
    Ok(ResonanceLattice {
        lambda: lambda.to_vec(),
        generators,
        rank,
        search_bound: bound,
        complete_under_bound,
    })
}

fn decomposes_over(k: &Multidegree, gens: &[Multidegree]) -> bool {
    if k.total() == 0 {
        return true;
    }
    gens.iter()
        .any(|g| k.checked_sub(g).is_some_and(|rest| decomposes_over(&rest, gens)))
}

/// Multidegrees `k` with `1 ≤ |k| ≤ degree` and `k·λ = λ_j`: the monomials
/// `x^k ∂/∂x_j` that the homological operator cannot remove.
pub fn resonant_monomials(spectrum: &Spectrum, j: usize, degree: u32) -> Result<Vec<Multidegree>> {
    let n = spectrum.n();
    if j >= n {
        return Err(Error::IndexOutOfRange { index: j, nvars: n });
    }
    let target = spectrum.get(j);
    Ok(Multidegree::up_to(n, 1, degree)
        .into_iter()
        .filter(|k| k.dot(spectrum.values()) == target)
        .collect())
}

/// `(r_j, s_j) = (λ_n, −λ_j) / gcd(λ_j, λ_n)`, so that `x_j^{r_j} x_n^{s_j}`
/// lies in `M_λ`. Requires `λ_j < 0 < λ_n` (with `n` the last index).
pub fn rj_sj(spectrum: &Spectrum, j: usize) -> Result<(u32, u32)> {
    let n = spectrum.n();
    if j + 1 >= n {
        return Err(Error::IndexOutOfRange { index: j, nvars: n - 1 });
    }
    let (lj, ln) = (spectrum.get(j), spectrum.get(n - 1));
    if !(lj < 0 && ln > 0) {
        return Err(Error::Spectrum(format!(
            "need λ_{j} < 0 < λ_last, got {lj} and {ln}"
        )));
    }
    let g = gcd(lj, ln);
    Ok(((ln / g) as u32, (-lj / g) as u32))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumClass {
    pub lambda: Vec<i64>,
    pub zero_eigenvalue: bool,
    pub zero_indices: Vec<usize>,
    /// Number of negative eigenvalues.
    pub r: usize,
    /// Whether `−λ` rather than `λ` has the `n − 1` negatives.
    pub sign_flip: bool,
    /// `n − 1` eigenvalues of one sign and one of the other, no zeros.
    pub matches_normal_profile: bool,
    /// Index of the lone eigenvalue whose axis is the isolated separatrix
    /// of the linear model.
    pub separatrix_axis: Option<usize>,
    pub isolated_separatrix: bool,
}

pub fn classify_spectrum(spectrum: &Spectrum) -> SpectrumClass {
    let lambda = spectrum.values();
    let n = lambda.len();
    let p = spectrum.sign_profile();
    let zero_indices: Vec<usize> = (0..n).filter(|&i| lambda[i] == 0).collect();
    let no_zero = p.zero == 0;
    let direct = no_zero && p.negative + 1 == n;
    let flipped = no_zero && p.positive + 1 == n && !direct;
    let matches = direct || flipped;
    let separatrix_axis = if direct {
        lambda.iter().position(|&l| l > 0)
    } else if flipped {
        lambda.iter().position(|&l| l < 0)
    } else {
        None
    };
    SpectrumClass {
        lambda: lambda.to_vec(),
        zero_eigenvalue: !no_zero,
        zero_indices,
        r: p.negative,
        sign_flip: flipped,
        matches_normal_profile: matches,
        separatrix_axis,
        isolated_separatrix: no_zero && n >= 2 && (p.negative == 1 || p.negative + 1 == n),
    }
}

/// Exact integer check used by tests and callers: `k·λ` against a target.
pub fn is_resonant(spectrum: &Spectrum, k: &Multidegree, target: i64) -> bool {
    k.dot(spectrum.values()) == target
}

/// `p/q` as a big rational.
pub fn ratio(p: i64, q: i64) -> BigRational {
    BigRational::new(p.into(), q.into())
}
