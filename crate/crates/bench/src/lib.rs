//! Fixtures shared by the benchmarks in `benches/`.

use foliation_core::{Coeff, Multidegree, Spectrum, TruncatedSeries, VectorField};

/// Every monomial of degree `1..=cap` in `n` variables with coefficient `1/(1 + |k|)`.
pub fn dense_series<K: Coeff>(n: usize, cap: u32) -> TruncatedSeries<K> {
    let mut s = TruncatedSeries::zero(n, cap);
    for k in Multidegree::up_to(n, 1, cap) {
        let c = K::from_ratio(1, 1 + k.total() as i64);
        s.add_term(k, c);
    }
    s
}

/// The diagonal field with spectrum `(−1, −2, 3)` plus transverse corrections
/// of type `(k, k)`.
pub fn perturbed_field<K: Coeff>(k: u32, cap: u32) -> (VectorField<K>, Spectrum) {
    let spec = Spectrum::new(vec![-1, -2, 3]).expect("valid spectrum");
    let mut comps: Vec<TruncatedSeries<K>> = (0..3)
        .map(|j| TruncatedSeries::monomial(3, cap, Multidegree::unit(3, j), K::from_i64(spec.get(j))))
        .collect();
    let x = |e: [u32; 3]| Multidegree::new(&e);
    for (j, e, c) in [
        (0, [k, 0, k], 1),
        (0, [1, k - 1, k], -1),
        (1, [k - 1, 1, k], 2),
        (1, [0, k, k], 1),
    ] {
        if e.iter().sum::<u32>() <= cap {
            let mut term = TruncatedSeries::monomial(3, cap, x(e), K::from_ratio(c, 2));
            term = term.try_add(&comps[j]).expect("same shape");
            comps[j] = term;
        }
    }
    (VectorField::new(comps).expect("singular field"), spec)
}
