//! Linear stability of the collocation methods (k = s).
//!
//! Applied to y^{(α)} = λy with step h, one step gives y_1 = R(q) y_0 with
//! q = λh^α and `R(q) = 1 + q/Γ(α+1) · bᵀ(I − qA)^{-1} e`,
//! where A = 𝓘 𝒫ᵀΩ and b are the quadrature weights.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fractional::rl_basis_matrix;
use crate::mittag_leffler::mittag_leffler;
use crate::quadrature::{gauss_jacobi_rule, jacobi_recurrence};
use crate::special::gamma;

#[derive(Debug, Clone, PartialEq)]
pub struct Tableau {
    pub s: usize,
    pub alpha: f64,
    pub a: DMatrix<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

pub fn butcher_tableau(s: usize, alpha: f64) -> Result<Tableau> {
    let table = jacobi_recurrence(alpha, s.max(1))?;
    let rule = gauss_jacobi_rule(&table, s, s)?;
    let local = rl_basis_matrix(&rule, &table, s);
    let a = local * rule.projection();
    Ok(Tableau {
        s,
        alpha,
        a,
        b: rule.weights,
        c: rule.nodes,
    })
}

/// R(q) evaluated with one complex LU solve.
pub fn stability_value(tab: &Tableau, q: Complex64) -> Result<Complex64> {
    let s = tab.s;
    let m = DMatrix::from_fn(s, s, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        Complex64::new(id, 0.0) - q * tab.a[(i, j)]
    });
    let e = DVector::from_element(s, Complex64::new(1.0, 0.0));
    let x = m
        .lu()
        .solve(&e)
        .filter(|x| x.iter().all(|v| v.re.is_finite() && v.im.is_finite()))
        .ok_or_else(|| Error::Singular(format!("I - qA is singular at q = {q}")))?;
    let btx: Complex64 = tab.b.iter().zip(x.iter()).map(|(b, v)| v * *b).sum();
    Ok(Complex64::new(1.0, 0.0) + q / gamma(tab.alpha + 1.0) * btx)
}

/// R(∞) = 1 − bᵀA^{-1}e / Γ(α+1).
pub fn stability_at_infinity(tab: &Tableau) -> Result<f64> {
    let e = DVector::from_element(tab.s, 1.0);
    let x = tab
        .a
        .clone()
        .lu()
        .solve(&e)
        .ok_or_else(|| Error::Singular("tableau matrix A is singular".into()))?;
    let btx: f64 = tab.b.iter().zip(x.iter()).map(|(b, v)| b * v).sum();
    Ok(1.0 - btx / gamma(tab.alpha + 1.0))
}

/// Spectrum of A against the sector |arg μ| < απ/2.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenCondition {
    pub eigenvalues: Vec<Complex64>,
    /// max |arg μ| / (απ/2); the condition holds when this is below one.
    pub worst_ratio: f64,
}

impl EigenCondition {
    pub fn holds(&self) -> bool {
        self.worst_ratio < 1.0
    }
}

pub fn eigen_condition(tab: &Tableau) -> EigenCondition {
    let eigenvalues: Vec<Complex64> = tab.a.complex_eigenvalues().iter().copied().collect();
    let worst = eigenvalues.iter().map(|mu| mu.arg().abs()).fold(0.0f64, f64::max);
    EigenCondition {
        eigenvalues,
        worst_ratio: worst / (tab.alpha * PI / 2.0),
    }
}

/// Rectangular sampling window in the q-plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub width: usize,
    pub height: usize,
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            width: 800,
            height: 800,
            re_min: -15.0,
            re_max: 5.0,
            im_min: -10.0,
            im_max: 10.0,
        }
    }
}

impl GridSpec {
    fn validate(&self) -> Result<()> {
        if self.width < 2 || self.height < 2 || !(self.re_min < self.re_max && self.im_min < self.im_max) {
            return Err(Error::Domain(format!("degenerate sampling grid {self:?}")));
        }
        Ok(())
    }

    pub fn point(&self, ix: usize, iy: usize) -> Complex64 {
        let re = self.re_min + (self.re_max - self.re_min) * ix as f64 / (self.width - 1) as f64;
        let im = self.im_min + (self.im_max - self.im_min) * iy as f64 / (self.height - 1) as f64;
        Complex64::new(re, im)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilitySample {
    pub q: Complex64,
    /// NaN at poles of R.
    pub abs_r: f64,
    /// NaN where E_α could not be evaluated.
    pub abs_e: f64,
}

/// Line segment of a level curve.
pub type Segment = [(f64, f64); 2];

#[derive(Debug, Clone)]
pub struct RegionData {
    pub s: usize,
    pub alpha: f64,
    pub grid: GridSpec,
    /// Row-major, x fastest.
    pub samples: Vec<StabilitySample>,
    pub r_boundary: Vec<Segment>,
    pub e_boundary: Vec<Segment>,
    /// The rays arg q = ±απ/2, clipped to the window.
    pub lambda_rays: Vec<Segment>,
}

pub fn region_boundary(s: usize, alpha: f64, grid: GridSpec) -> Result<RegionData> {
    grid.validate()?;
    let tab = butcher_tableau(s, alpha)?;
    let samples: Vec<StabilitySample> = (0..grid.width * grid.height)
        .into_par_iter()
        .map(|idx| {
            let q = grid.point(idx % grid.width, idx / grid.width);
            let abs_r = stability_value(&tab, q).map(|r| r.norm()).unwrap_or(f64::NAN);
            let abs_e = mittag_leffler(alpha, 1.0, q).map(|e| e.norm()).unwrap_or(f64::NAN);
            StabilitySample { q, abs_r, abs_e }
        })
        .collect();
    let r_field: Vec<f64> = samples.iter().map(|p| p.abs_r - 1.0).collect();
    let e_field: Vec<f64> = samples.iter().map(|p| p.abs_e - 1.0).collect();
    Ok(RegionData {
        s,
        alpha,
        grid,
        r_boundary: marching_squares(&grid, &r_field),
        e_boundary: marching_squares(&grid, &e_field),
        lambda_rays: lambda_rays(alpha, &grid),
        samples,
    })
}

/// Zero level set of a row-major grid field by marching squares.
/// Cells touching a NaN are skipped.
pub fn marching_squares(grid: &GridSpec, field: &[f64]) -> Vec<Segment> {
    let (w, h) = (grid.width, grid.height);
    let at = |ix: usize, iy: usize| field[iy * w + ix];
    let pos = |ix: usize, iy: usize| {
        let p = grid.point(ix, iy);
        (p.re, p.im)
    };
    let lerp = |a: (f64, f64), b: (f64, f64), fa: f64, fb: f64| {
        let t = fa / (fa - fb);
        (a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1))
    };
    let mut out = Vec::new();
    for iy in 0..h - 1 {
        for ix in 0..w - 1 {
            // corners counter-clockwise from bottom-left
            let corners = [(ix, iy), (ix + 1, iy), (ix + 1, iy + 1), (ix, iy + 1)];
            let f: Vec<f64> = corners.iter().map(|&(x, y)| at(x, y)).collect();
            if f.iter().any(|v| v.is_nan()) {
                continue;
            }
            let p: Vec<(f64, f64)> = corners.iter().map(|&(x, y)| pos(x, y)).collect();
            let mut crossings = Vec::with_capacity(4);
            for e in 0..4 {
                let (a, b) = (e, (e + 1) % 4);
                if (f[a] < 0.0) != (f[b] < 0.0) {
                    crossings.push((e, lerp(p[a], p[b], f[a], f[b])));
                }
            }
            match crossings.len() {
                2 => out.push([crossings[0].1, crossings[1].1]),
                4 => {
                    // Saddle: pair edges according to the sign at the centre.
                    let centre = 0.25 * f.iter().sum::<f64>();
                    let inside_bl = f[0] < 0.0;
                    if (centre < 0.0) == inside_bl {
                        out.push([crossings[0].1, crossings[1].1]);
                        out.push([crossings[2].1, crossings[3].1]);
                    } else {
                        out.push([crossings[3].1, crossings[0].1]);
                        out.push([crossings[1].1, crossings[2].1]);
                    }
                }
                _ => {}
            }
        }
    }
    out
}

fn lambda_rays(alpha: f64, grid: &GridSpec) -> Vec<Segment> {
    let theta = alpha * PI / 2.0;
    [theta, -theta]
        .iter()
        .filter_map(|&t| {
            let (dx, dy) = (t.cos(), t.sin());
            // Largest ρ keeping ρ(dx, dy) inside the window (the origin may lie outside).
            let mut rho = f64::INFINITY;
            for (d, lo, hi) in [(dx, grid.re_min, grid.re_max), (dy, grid.im_min, grid.im_max)] {
                if d > 0.0 {
                    rho = rho.min(hi / d);
                } else if d < 0.0 {
                    rho = rho.min(lo / d);
                }
            }
            (rho.is_finite() && rho > 0.0).then_some([(0.0, 0.0), (rho * dx, rho * dy)])
        })
        .collect()
}

/// max over a of min over b of the Euclidean distance, symmetrised.
pub fn hausdorff_distance(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let one_sided = |x: &[(f64, f64)], y: &[(f64, f64)]| {
        x.par_iter()
            .map(|p| {
                y.iter()
                    .map(|q| ((p.0 - q.0).powi(2) + (p.1 - q.1).powi(2)).sqrt())
                    .fold(f64::INFINITY, f64::min)
            })
            .reduce(|| 0.0, f64::max)
    };
    one_sided(a, b).max(one_sided(b, a))
}

pub fn segment_points(segments: &[Segment]) -> Vec<(f64, f64)> {
    segments.iter().flat_map(|s| s.iter().copied()).collect()
}

impl RegionData {
    /// Columns `re,im,abs_r,abs_e`; NaN marks poles and failed evaluations.
    pub fn write_samples_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "re,im,abs_r,abs_e")?;
        for p in &self.samples {
            writeln!(out, "{},{},{:e},{:e}", p.q.re, p.q.im, p.abs_r, p.abs_e)?;
        }
        Ok(())
    }

    /// Columns `curve,x0,y0,x1,y1` with curve ∈ {R, E, ray}.
    pub fn write_boundary_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "curve,x0,y0,x1,y1")?;
        for (name, segs) in [("R", &self.r_boundary), ("E", &self.e_boundary), ("ray", &self.lambda_rays)] {
            for [(x0, y0), (x1, y1)] in segs.iter() {
                writeln!(out, "{name},{x0},{y0},{x1},{y1}")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_stage_tableau() {
        let alpha = 0.4;
        let tab = butcher_tableau(1, alpha).unwrap();
        let c1 = 1.0 / (1.0 + alpha);
        assert!((tab.c[0] - c1).abs() < 1e-15);
        assert!((tab.a[(0, 0)] - c1.powf(alpha) / gamma(alpha + 1.0)).abs() < 1e-15);
        assert!((tab.b[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn r_at_origin_is_one() {
        let tab = butcher_tableau(5, 0.5).unwrap();
        let r = stability_value(&tab, Complex64::new(0.0, 0.0)).unwrap();
        assert_eq!(r, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn marching_squares_on_a_circle() {
        let grid = GridSpec {
            width: 101,
            height: 101,
            re_min: -2.0,
            re_max: 2.0,
            im_min: -2.0,
            im_max: 2.0,
        };
        let field: Vec<f64> = (0..101 * 101)
            .map(|i| grid.point(i % 101, i / 101).norm() - 1.0)
            .collect();
        let segs = marching_squares(&grid, &field);
        assert!(!segs.is_empty());
        for (x, y) in segment_points(&segs) {
            assert!(((x * x + y * y).sqrt() - 1.0).abs() < 2e-3);
        }
    }

    #[test]
    fn rays_have_the_sector_slope() {
        let rays = lambda_rays(0.5, &GridSpec::default());
        assert_eq!(rays.len(), 2);
        for [(x0, y0), (x1, y1)] in rays {
            assert!((((y1 - y0) / (x1 - x0)).abs() - 1.0).abs() < 1e-12);
        }
    }
}
