use rayon::prelude::*;
use serde::Serialize;

use super::coarse::{all_subarc_lower, all_subarc_upper, KInterval, PairTable};
use crate::error::Result;
use crate::metrics::lower::k_upper_local;
use crate::metrics::{k_between, k_lower_bound, QHGraph};
use crate::space::{Domain, Polyline};

/// One vertex pair of a solidity table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolidityEntry {
    pub i: usize,
    pub j: usize,
    pub coarse_lower: f64,
    pub coarse_upper: f64,
    pub k_lower: f64,
    pub k_upper: f64,
    /// `coarse_upper / k_lower`, the conservative ratio.
    pub ratio: f64,
    /// The coarse length depends on steps admitted only by their upper end.
    pub mixed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SolidityReport {
    pub nu_estimate: f64,
    pub h: f64,
    pub worst_pair: (usize, usize),
    /// `coarse_lower / k_upper` at the worst pair, with `k_upper` from the graph.
    pub worst_ratio_lower: f64,
    pub entries: Vec<SolidityEntry>,
}

/// Pairwise `k` intervals between the vertices of `curve`: certified lower
/// bounds, and the smaller of the subarc length and the local bound above.
pub fn curve_k_table(domain: &Domain, curve: &Polyline) -> Result<PairTable> {
    let n = curve.len();
    let v = curve.vertices();
    let rows: Vec<Vec<KInterval>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (i + 1..n)
                .map(|j| {
                    let lower = k_lower_bound(domain, &v[i], &v[j])?;
                    let mut upper = curve.sub_qh(i, j);
                    for (a, b) in [(&v[i], &v[j]), (&v[j], &v[i])] {
                        if let Some(u) = k_upper_local(domain, a, b)? {
                            upper = upper.min(u);
                        }
                    }
                    // Quadrature slack only.
                    if upper < lower && lower - upper <= 1e-6 * lower {
                        upper = lower;
                    }
                    Ok(KInterval { lower, upper })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok(PairTable::from_fn(n, |i, j| rows[i][j - i - 1]))
}

/// Empirical `(nu, h)`-solidity of `curve`: the largest ratio of the
/// h-coarse length of a subarc to the distance of its endpoints.
pub fn solidity_profile(domain: &Domain, curve: &Polyline, h: f64, graph: &QHGraph) -> Result<SolidityReport> {
    let n = curve.len();
    let table = curve_k_table(domain, curve)?;
    let up = all_subarc_upper(&table, h);
    let lo = all_subarc_lower(&table, h);
    let mut entries = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let k = table.get(i, j);
            let (cu, cl) = (up[i * n + j], lo[i * n + j]);
            let ratio = if cu == 0.0 {
                0.0
            } else if k.lower > 0.0 {
                cu / k.lower
            } else {
                f64::INFINITY
            };
            entries.push(SolidityEntry {
                i,
                j,
                coarse_lower: cl,
                coarse_upper: cu,
                k_lower: k.lower,
                k_upper: k.upper,
                ratio,
                mixed: cl < cu,
            });
        }
    }
    let worst = entries.iter().fold(None::<&SolidityEntry>, |w, e| match w {
        Some(w) if w.ratio >= e.ratio => Some(w),
        _ => Some(e),
    });
    let Some(worst) = worst else {
        return Ok(SolidityReport { nu_estimate: 0.0, h, worst_pair: (0, 0), worst_ratio_lower: 0.0, entries });
    };
    let worst_pair = (worst.i, worst.j);
    let worst_ratio_lower = if worst.coarse_lower > 0.0 {
        let v = curve.vertices();
        let est = k_between(domain, &v[worst.i], &v[worst.j], graph)?;
        worst.coarse_lower / est.k_upper.min(worst.k_upper)
    } else {
        0.0
    };
    Ok(SolidityReport { nu_estimate: worst.ratio, h, worst_pair, worst_ratio_lower, entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arcs::coarse::coarse_qh_length;
    use crate::metrics::build_qh_graph;
    use crate::space::Point;

    fn half_plane() -> Domain {
        Domain::upper_half_plane(Some((Point::xy(-25.0, 0.0), Point::xy(25.0, 25.0))))
    }

    fn segment(domain: &Domain, a: Point, b: Point, pieces: usize) -> Polyline {
        let v = (0..=pieces).map(|k| a.lerp(&b, k as f64 / pieces as f64)).collect();
        Polyline::new(domain, v).unwrap()
    }

    #[test]
    fn vertical_segment_is_solid() {
        let hp = half_plane();
        let g = build_qh_graph(&hp, 2.0, 8, 1).unwrap();
        let line = segment(&hp, Point::xy(0.0, 1.0), Point::xy(0.0, std::f64::consts::E), 12);
        let r = solidity_profile(&hp, &line, 0.0, &g).unwrap();
        assert!(r.nu_estimate <= 1.01, "{}", r.nu_estimate);
        assert!(r.nu_estimate >= 1.0 - 1e-6);
    }

    #[test]
    fn long_horizontal_segment_is_not() {
        // Oracle: l_k = 40 against k = arccosh(1 + 40^2 / 2) ~ 5.99.
        let hp = half_plane();
        let g = build_qh_graph(&hp, 2.0, 8, 1).unwrap();
        let line = segment(&hp, Point::xy(-20.0, 1.0), Point::xy(20.0, 1.0), 40);
        let r = solidity_profile(&hp, &line, 0.0, &g).unwrap();
        assert!(r.nu_estimate >= 5.0, "{}", r.nu_estimate);
        let expect = 40.0 / 801f64.acosh();
        assert!((r.nu_estimate - expect).abs() < 1e-4, "{} vs {expect}", r.nu_estimate);
        assert_eq!(r.worst_pair, (0, 40));
    }

    #[test]
    fn empty_family_reports_zero() {
        let hp = half_plane();
        let g = build_qh_graph(&hp, 2.0, 8, 1).unwrap();
        let line = segment(&hp, Point::xy(0.0, 1.0), Point::xy(0.0, std::f64::consts::E), 1);
        let r = solidity_profile(&hp, &line, 2.0, &g).unwrap();
        assert_eq!(r.nu_estimate, 0.0);
    }

    #[test]
    fn coarse_length_approaches_qh_length() {
        let ball = Domain::unit_disk();
        let (a, b) = (Point::xy(-0.6, 0.2), Point::xy(0.7, -0.1));
        let mut prev = 0.0;
        for pieces in [2, 4, 8, 16] {
            let line = segment(&ball, a, b, pieces);
            let t = curve_k_table(&ball, &line).unwrap();
            let c = coarse_qh_length(&t, 0.0).upper;
            assert!(c <= line.qh_length() + 1e-6);
            assert!(c >= prev * (1.0 - 1e-6), "{c} < {prev}");
            prev = c;
        }
    }

    #[test]
    fn table_intervals_are_ordered() {
        let slit = Domain::slit_disk();
        let v = vec![Point::xy(0.5, 0.1), Point::xy(-0.1, 0.1), Point::xy(-0.1, -0.1), Point::xy(0.5, -0.1)];
        let line = Polyline::new(&slit, v).unwrap();
        let t = curve_k_table(&slit, &line).unwrap();
        for i in 0..4 {
            for j in i + 1..4 {
                let k = t.get(i, j);
                assert!(k.lower <= k.upper, "{i} {j} {k:?}");
            }
        }
    }
}
