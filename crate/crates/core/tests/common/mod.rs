//! Independent finite-difference oracles shared by the integration tests.
//! Nothing here calls into the engine's differentiation or connection code.
#![allow(dead_code)]

pub mod corpus;

use jetlag::jet::{Coord, Dims, JetPoint};
use jetlag::spaces::{Matrix, SpaceSpec};
use jetlag::GeometryContext;

pub type Mat = Vec<Vec<f64>>;

/// Step of the five-point stencil. Error ~h⁴·f⁽⁵⁾, rounding ~ε/h.
pub const STEP: f64 = 1e-3;

pub fn five_point(f: impl Fn(f64) -> Vec<f64>) -> Vec<f64> {
    let (a, b, c, d) = (f(2.0 * STEP), f(STEP), f(-STEP), f(-2.0 * STEP));
    (0..a.len()).map(|k| (-a[k] + 8.0 * b[k] - 8.0 * c[k] + d[k]) / (12.0 * STEP)).collect()
}

/// `∂f/∂c` of a vector-valued function of the jet point.
pub fn d_jet(f: &dyn Fn(&JetPoint<f64>) -> Vec<f64>, pt: &JetPoint<f64>, c: Coord) -> Vec<f64> {
    five_point(|s| f(&pt.shifted(c, s)))
}

/// `∂f/∂y^c` of a vector-valued function of plain coordinates.
pub fn d_plain(f: &dyn Fn(&[f64]) -> Vec<f64>, y: &[f64], c: usize) -> Vec<f64> {
    five_point(|s| {
        let mut z = y.to_vec();
        z[c] += s;
        f(&z)
    })
}

pub fn inv(m: &Mat) -> Mat {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            row
        })
        .collect();
    for c in 0..n {
        let piv = (c..n).max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs())).unwrap();
        a.swap(c, piv);
        let d = a[c][c];
        assert!(d.abs() > 1e-300, "singular matrix in oracle");
        for v in a[c].iter_mut() {
            *v /= d;
        }
        for r in 0..n {
            if r != c {
                let f = a[r][c];
                let pivot_row = a[c].clone();
                for (v, pv) in a[r].iter_mut().zip(pivot_row) {
                    *v -= f * pv;
                }
            }
        }
    }
    a.into_iter().map(|r| r[n..].to_vec()).collect()
}

fn flatten(m: &Mat) -> Vec<f64> {
    m.iter().flatten().copied().collect()
}

/// `∂_c m_{ab}` as `[c][a][b]`.
pub fn metric_grad(m: &dyn Fn(&[f64]) -> Mat, y: &[f64]) -> Vec<Mat> {
    let k = y.len();
    let flat = |z: &[f64]| flatten(&m(z));
    (0..k)
        .map(|c| d_plain(&flat, y, c).chunks(k).map(|r| r.to_vec()).collect())
        .collect()
}

/// Christoffel symbols `Γ^a_{bc}` as `[a][b][c]` of a metric given as a
/// function of its own coordinates.
pub fn christoffel(m: &dyn Fn(&[f64]) -> Mat, y: &[f64]) -> Vec<Vec<Vec<f64>>> {
    let k = y.len();
    let mi = inv(&m(y));
    let dm = metric_grad(m, y);
    (0..k)
        .map(|a| {
            (0..k)
                .map(|b| {
                    (0..k)
                        .map(|c| (0..k).map(|r| 0.5 * mi[a][r] * (dm[c][r][b] + dm[b][r][c] - dm[r][b][c])).sum())
                        .collect()
                })
                .collect()
        })
        .collect()
}

fn christoffel_flat(m: &dyn Fn(&[f64]) -> Mat, y: &[f64]) -> Vec<f64> {
    christoffel(m, y).into_iter().flatten().flatten().collect()
}

/// `R^a_{ebc} = ∂_c Γ^a_{eb} − ∂_b Γ^a_{ec} + Γ^μ_{eb} Γ^a_{μc} − Γ^μ_{ec} Γ^a_{μb}`
/// as `[a][e][b][c]`, derivatives of Γ by nested differences.
pub fn riemann(m: &dyn Fn(&[f64]) -> Mat, y: &[f64]) -> Vec<f64> {
    let k = y.len();
    let g = christoffel(m, y);
    let dg: Vec<Vec<f64>> = (0..k).map(|c| d_plain(&|z| christoffel_flat(m, z), y, c)).collect();
    let at = |c: usize, a: usize, e: usize, b: usize| dg[c][(a * k + e) * k + b];
    let mut out = vec![0.0; k * k * k * k];
    for a in 0..k {
        for e in 0..k {
            for b in 0..k {
                for c in 0..k {
                    let mut s = at(c, a, e, b) - at(b, a, e, c);
                    for mu in 0..k {
                        s += g[mu][e][b] * g[a][mu][c] - g[mu][e][c] * g[a][mu][b];
                    }
                    out[((a * k + e) * k + b) * k + c] = s;
                }
            }
        }
    }
    out
}

/// `Ric_{eb} = R^μ_{ebμ}`.
pub fn ricci(m: &dyn Fn(&[f64]) -> Mat, y: &[f64]) -> Mat {
    let k = y.len();
    let r = riemann(m, y);
    (0..k).map(|e| (0..k).map(|b| (0..k).map(|mu| r[((mu * k + e) * k + b) * k + mu]).sum()).collect()).collect()
}

pub fn scalar_curvature(m: &dyn Fn(&[f64]) -> Mat, y: &[f64]) -> f64 {
    let k = y.len();
    let mi = inv(&m(y));
    let ric = ricci(m, y);
    (0..k).flat_map(|a| (0..k).map(move |b| (a, b))).map(|(a, b)| mi[a][b] * ric[a][b]).sum()
}

/// `Ric − ½ Sc m` with both indices down.
pub fn einstein(m: &dyn Fn(&[f64]) -> Mat, y: &[f64]) -> Mat {
    let mv = m(y);
    let ric = ricci(m, y);
    let sc = scalar_curvature(m, y);
    ric.iter().zip(&mv).map(|(r, g)| r.iter().zip(g).map(|(a, b)| a - 0.5 * sc * b).collect()).collect()
}

/// `∇^μ E_{μβ}` of the Einstein tensor, all derivatives by differences.
pub fn einstein_divergence(m: &dyn Fn(&[f64]) -> Mat, y: &[f64]) -> Vec<f64> {
    let k = y.len();
    let mi = inv(&m(y));
    let e = einstein(m, y);
    let g = christoffel(m, y);
    let de: Vec<Mat> = (0..k)
        .map(|c| d_plain(&|z| flatten(&einstein(m, z)), y, c).chunks(k).map(|r| r.to_vec()).collect())
        .collect();
    (0..k)
        .map(|b| {
            let mut s = 0.0;
            for mu in 0..k {
                for nu in 0..k {
                    // ∇_ν E_{μβ}
                    let mut cov = de[nu][mu][b];
                    for r in 0..k {
                        cov -= g[r][nu][mu] * e[r][b] + g[r][nu][b] * e[mu][r];
                    }
                    s += mi[mu][nu] * cov;
                }
            }
            s
        })
        .collect()
}

pub fn max_dev(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn mat(rows: &[&[&str]]) -> Matrix {
    rows.iter().map(|r| r.iter().map(|s| s.to_string()).collect()).collect()
}

pub fn build(spec: SpaceSpec, p: usize, n: usize) -> GeometryContext {
    spec.build(Dims::new(p, n)).expect("space builds")
}

pub fn point(t: &[f64], x: &[f64], xs: &[&[f64]]) -> JetPoint<f64> {
    JetPoint::new(t.to_vec(), x.to_vec(), xs.iter().map(|r| r.to_vec()).collect()).expect("well-shaped point")
}

/// The fixtures' curved temporal metric as a plain function of `t`.
pub fn curved_h_closure(p: usize) -> impl Fn(&[f64]) -> Mat {
    move |t: &[f64]| {
        (0..p)
            .map(|a| {
                (0..p)
                    .map(|b| {
                        if a == b {
                            1.0 + 0.25 * t[(a + 1) % p].powi(2)
                        } else if a + b == 1 {
                            0.1 * t[0].sin()
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect()
    }
}
