use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::config::BeamConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Z,
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DofKind {
    Translation,
    Rotation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dof {
    pub node: usize,
    pub direction: Direction,
    pub kind: DofKind,
}

/// Mass-normalized eigenpairs, ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSolution {
    pub omega: Vec<f64>,
    /// Columns are mode shapes over all retained DoFs.
    pub phi: DMatrix<f64>,
}

impl EigenSolution {
    pub fn freq_hz(&self) -> Vec<f64> {
        self.omega.iter().map(|w| w / (2.0 * std::f64::consts::PI)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructuralModel {
    pub m: DMatrix<f64>,
    pub k: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub dof_map: Vec<Dof>,
    /// Translational DoFs, node-major with z before y.
    pub output_dofs: Vec<usize>,
    /// z and y translations of the first free node.
    pub input_dofs: Vec<usize>,
    pub eigen: EigenSolution,
}

/// Per-node DoF order: w_z, θ_y, w_y, θ_z.
const DOFS_PER_NODE: usize = 4;

fn element_matrices(ei: f64, rho_a: f64, l: f64) -> ([[f64; 4]; 4], [[f64; 4]; 4]) {
    let k = ei / l.powi(3);
    let ke = [
        [12.0 * k, 6.0 * l * k, -12.0 * k, 6.0 * l * k],
        [6.0 * l * k, 4.0 * l * l * k, -6.0 * l * k, 2.0 * l * l * k],
        [-12.0 * k, -6.0 * l * k, 12.0 * k, -6.0 * l * k],
        [6.0 * l * k, 2.0 * l * l * k, -6.0 * l * k, 4.0 * l * l * k],
    ];
    let m = rho_a * l / 420.0;
    let me = [
        [156.0 * m, 22.0 * l * m, 54.0 * m, -13.0 * l * m],
        [22.0 * l * m, 4.0 * l * l * m, 13.0 * l * m, -3.0 * l * l * m],
        [54.0 * m, 13.0 * l * m, 156.0 * m, -22.0 * l * m],
        [-13.0 * l * m, -3.0 * l * l * m, -22.0 * l * m, 4.0 * l * l * m],
    ];
    (ke, me)
}

/// Consistent Euler–Bernoulli mass and stiffness for bending in the x–z
/// plane (I_y) and the x–y plane (I_z); node 0 is clamped. Damping follows
/// from uniform modal damping `cfg.zeta_all`.
pub fn assemble_beam(cfg: &BeamConfig) -> Result<StructuralModel> {
    cfg.validate()?;
    let sec = cfg.section();
    let ne = cfg.n_elem;
    let l = cfg.length_m / ne as f64;
    let n_full = DOFS_PER_NODE * (ne + 1);
    let mut k = DMatrix::zeros(n_full, n_full);
    let mut m = DMatrix::zeros(n_full, n_full);
    let rho_a = cfg.rho_kg_m3 * sec.area;
    for e in 0..ne {
        for (offset, i) in [(0, sec.i_y), (2, sec.i_z)] {
            let (ke, me) = element_matrices(cfg.e_pa * i, rho_a, l);
            let idx = [
                DOFS_PER_NODE * e + offset,
                DOFS_PER_NODE * e + offset + 1,
                DOFS_PER_NODE * (e + 1) + offset,
                DOFS_PER_NODE * (e + 1) + offset + 1,
            ];
            for a in 0..4 {
                for b in 0..4 {
                    k[(idx[a], idx[b])] += ke[a][b];
                    m[(idx[a], idx[b])] += me[a][b];
                }
            }
        }
    }
    let n = n_full - DOFS_PER_NODE;
    let k = k.view((DOFS_PER_NODE, DOFS_PER_NODE), (n, n)).into_owned();
    let m = m.view((DOFS_PER_NODE, DOFS_PER_NODE), (n, n)).into_owned();

    let mut dof_map = Vec::with_capacity(n);
    for node in 1..=ne {
        for (direction, kind) in [
            (Direction::Z, DofKind::Translation),
            (Direction::Z, DofKind::Rotation),
            (Direction::Y, DofKind::Translation),
            (Direction::Y, DofKind::Rotation),
        ] {
            dof_map.push(Dof { node, direction, kind });
        }
    }
    let output_dofs = (0..n).filter(|&i| dof_map[i].kind == DofKind::Translation).collect();

    let mut model = StructuralModel {
        c: DMatrix::zeros(n, n),
        eigen: EigenSolution {
            omega: Vec::new(),
            phi: DMatrix::zeros(n, 0),
        },
        m,
        k,
        dof_map,
        output_dofs,
        input_dofs: vec![0, 2],
    };
    model.eigen = eigen_modes(&model)?;
    model.c = modal_damping_matrix(&model, &model.eigen, cfg.zeta_all);
    Ok(model)
}

/// Solves `K φ = ω² M φ` through the Cholesky factor of `M`. Modes are
/// mass-normalized and signed so their largest component is positive.
pub fn eigen_modes(model: &StructuralModel) -> Result<EigenSolution> {
    let n = model.m.nrows();
    let chol = model
        .m
        .clone()
        .cholesky()
        .ok_or_else(|| Error::numerical("mass matrix is not positive definite", f64::INFINITY))?;
    let l = chol.l();
    let l_inv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::numerical("singular Cholesky factor", f64::INFINITY))?;
    let mut a = &l_inv * &model.k * l_inv.transpose();
    a = (&a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(a, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::numerical("eigen-solve did not converge", f64::INFINITY))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));

    let mut omega = Vec::with_capacity(n);
    let mut phi = DMatrix::zeros(n, n);
    let back = l_inv.transpose();
    for (col, &i) in order.iter().enumerate() {
        let lam = eig.eigenvalues[i];
        if lam <= 0.0 {
            return Err(Error::numerical(
                format!("non-positive eigenvalue {lam}; structure is not restrained"),
                f64::INFINITY,
            ));
        }
        omega.push(lam.sqrt());
        let mut v = &back * eig.eigenvectors.column(i);
        let imax = v.iamax();
        if v[imax] < 0.0 {
            v.neg_mut();
        }
        phi.set_column(col, &v);
    }
    Ok(EigenSolution { omega, phi })
}

/// `C = M Φ diag(2ζω) Φᵀ M` for mass-normalized Φ.
pub fn modal_damping_matrix(model: &StructuralModel, eigen: &EigenSolution, zeta: f64) -> DMatrix<f64> {
    let mp = &model.m * &eigen.phi;
    let mut scaled = mp.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= 2.0 * zeta * eigen.omega[j];
    }
    let c = &scaled * mp.transpose();
    (&c + c.transpose()) * 0.5
}

/// Modal damping ratios implied by `C`: `(ΦᵀCΦ)_nn / (2ω_n)`.
pub fn modal_damping_ratios(model: &StructuralModel) -> Vec<f64> {
    let e = &model.eigen;
    let pcp = e.phi.transpose() * &model.c * &e.phi;
    e.omega
        .iter()
        .enumerate()
        .map(|(n, w)| pcp[(n, n)] / (2.0 * w))
        .collect()
}
