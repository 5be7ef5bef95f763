//! Initial points shared by the multistart searches.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::{ChannelPair, CovariancePair};
use crate::matrix::{GenMatrix, SymMatrix};

pub(crate) fn rank_one_along(v: &DVector<f64>, power: f64) -> SymMatrix {
    SymMatrix::symmetrize(v * v.transpose() * power)
}

pub(crate) fn dominant_right_singular(h: &GenMatrix) -> DVector<f64> {
    let svd = h.clone().svd(false, true);
    let vt = svd.v_t.expect("requested V^T");
    let (idx, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &s)| if s > acc.1 { (i, s) } else { acc });
    vt.row(idx).transpose()
}

/// Random PSD matrix with trace drawn uniformly in `[0, power]`.
pub(crate) fn random_covariance(rng: &mut impl Rng, t: usize, power: f64) -> SymMatrix {
    let g = DMatrix::from_fn(t, t, |_, _| rng.gen_range(-1.0..1.0));
    let s = SymMatrix::symmetrize(&g * g.transpose());
    let tr = s.trace();
    if tr <= 0.0 {
        return SymMatrix::zeros(t);
    }
    s.scale(power * rng.gen_range(0.0..=1.0) / tr)
}

pub(crate) fn restart_rng(seed: u64, index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(index as u64))
}

/// Zero, isotropic full power, rank-one full power along the dominant right
/// singular vectors of `dir1` / `dir2`, then seeded random points; `count`
/// in total (at least one).
pub(crate) fn multistart(ch: &ChannelPair, dir1: &GenMatrix, dir2: &GenMatrix, count: usize, seed: u64) -> Vec<CovariancePair> {
    let t = ch.dim();
    let mut out = vec![
        CovariancePair::zero(t),
        CovariancePair::isotropic(ch),
        CovariancePair::new(
            rank_one_along(&dominant_right_singular(dir1), ch.p1()),
            rank_one_along(&dominant_right_singular(dir2), ch.p2()),
        ),
    ];
    let count = count.max(1);
    out.truncate(count);
    for k in out.len()..count {
        let mut rng = restart_rng(seed, k);
        out.push(CovariancePair::new(random_covariance(&mut rng, t, ch.p1()), random_covariance(&mut rng, t, ch.p2())));
    }
    out
}
