//! Mixed graded + uniform mesh.
//!
//! Steps h_i = h_1 r^{i−1}, i = 1..ν, cover [0, n h] and are followed by
//! N − n uniform steps of size h = T/N. The ratio r is 2 when n = 1 and
//! n/(n−1) otherwise; for n > 1 the graded count ν is raised one at a time
//! until the last graded step is at most 1.1 h. When ν = n the prefix is
//! made of n uniform cells (ratio 1) and the whole mesh is uniform.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const LAST_STEP_BOUND: f64 = 1.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedMesh {
    pub t_final: f64,
    /// Number of uniform cells of size h = T/N spanning [0, T].
    pub n_total: usize,
    /// Uniform cells covered by the graded prefix.
    pub n_glue: usize,
    /// Graded step count after adjustment.
    pub nu: usize,
    /// Graded step count as requested.
    pub nu_requested: usize,
    pub ratio: f64,
    pub h: f64,
    pub h1: f64,
    /// ν + 1 + (N − n) node times.
    pub times: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepKind {
    Graded,
    Uniform,
}

/// Location of one step in the global ordering.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDescriptor {
    pub kind: StepKind,
    /// 1..=ν for graded steps, n+1..=N for uniform ones.
    pub local_index: usize,
    pub size: f64,
    pub left_time: f64,
}

/// Grading ratio chosen from n.
pub fn grading_ratio(n: usize) -> f64 {
    if n == 1 {
        2.0
    } else {
        n as f64 / (n as f64 - 1.0)
    }
}

/// (r^m − 1)/(r − 1), with the r = 1 limit m.
pub(crate) fn geometric_sum(r: f64, m: usize) -> f64 {
    if r == 1.0 {
        m as f64
    } else {
        (r.powi(m as i32) - 1.0) / (r - 1.0)
    }
}

pub fn build_mixed_mesh(t_final: f64, n_total: usize, n_glue: usize, nu: usize) -> Result<MixedMesh> {
    if !(t_final > 0.0 && t_final.is_finite()) {
        return Err(Error::InvalidMesh(format!("final time must be positive, got {t_final}")));
    }
    if n_total == 0 {
        return Err(Error::InvalidMesh("N must be at least 1".into()));
    }
    if n_glue == 0 || n_glue > n_total {
        return Err(Error::InvalidMesh(format!(
            "need 1 <= n <= N, got n = {n_glue}, N = {n_total}"
        )));
    }
    if nu == 0 {
        return Err(Error::InvalidMesh("nu must be at least 1".into()));
    }
    let h = t_final / n_total as f64;
    let glue = n_glue as f64 * h;

    let (ratio, nu_eff) = if nu == n_glue {
        (1.0, nu)
    } else {
        let r = grading_ratio(n_glue);
        let mut nu_eff = nu;
        if n_glue > 1 {
            // h_ν = h / (1 − r^{−ν})
            while 1.0 / (1.0 - r.powi(-(nu_eff as i32))) > LAST_STEP_BOUND {
                nu_eff += 1;
            }
        }
        (r, nu_eff)
    };
    let h1 = glue / geometric_sum(ratio, nu_eff);

    let mut times = Vec::with_capacity(nu_eff + 1 + n_total - n_glue);
    times.push(0.0);
    let mut t = 0.0;
    let mut step = h1;
    for _ in 0..nu_eff {
        t += step;
        times.push(t);
        step *= ratio;
    }
    *times.last_mut().unwrap() = glue;
    for j in n_glue + 1..=n_total {
        times.push(j as f64 * h);
    }
    *times.last_mut().unwrap() = t_final;

    Ok(MixedMesh {
        t_final,
        n_total,
        n_glue,
        nu: nu_eff,
        nu_requested: nu,
        ratio,
        h,
        h1,
        times,
    })
}

impl MixedMesh {
    pub fn step_count(&self) -> usize {
        self.nu + self.n_total - self.n_glue
    }

    pub fn node_count(&self) -> usize {
        self.times.len()
    }

    /// True when the graded prefix degenerates to uniform cells.
    pub fn is_uniform(&self) -> bool {
        self.ratio == 1.0
    }

    /// Size of graded step i (1-based).
    pub fn graded_step(&self, i: usize) -> f64 {
        self.h1 * self.ratio.powi(i as i32 - 1)
    }

    pub fn last_graded_step(&self) -> f64 {
        self.graded_step(self.nu)
    }

    pub fn step_descriptor(&self, index: usize) -> Result<StepDescriptor> {
        if index >= self.step_count() {
            return Err(Error::InvalidMesh(format!(
                "step index {index} out of range (mesh has {} steps)",
                self.step_count()
            )));
        }
        let left_time = self.times[index];
        Ok(if index < self.nu {
            StepDescriptor {
                kind: StepKind::Graded,
                local_index: index + 1,
                size: self.graded_step(index + 1),
                left_time,
            }
        } else {
            StepDescriptor {
                kind: StepKind::Uniform,
                local_index: self.n_glue + 1 + (index - self.nu),
                size: self.h,
                left_time,
            }
        })
    }

    pub fn echo(&self) -> MeshEcho {
        MeshEcho {
            t_final: self.t_final,
            n_total: self.n_total,
            n: self.n_glue,
            nu_effective: self.nu,
            r: self.ratio,
            h: self.h,
            h1: self.h1,
            node_count: self.node_count(),
        }
    }
}

/// Mesh summary written next to every trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshEcho {
    #[serde(rename = "T")]
    pub t_final: f64,
    #[serde(rename = "N")]
    pub n_total: usize,
    pub n: usize,
    pub nu_effective: usize,
    pub r: f64,
    pub h: f64,
    pub h1: f64,
    pub node_count: usize,
}
