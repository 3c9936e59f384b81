//! Contact-constrained statics of a floating-base robot.
//!
//! At rest the equations of motion reduce to `g = S_aᵀΓ + J_cᵀF_r`.
//! Projecting through the contact null space `N_c = I − J̄_c J_c` removes
//! the reactions and leaves `N_cᵀg = (S_a N_c)ᵀΓ`, solved with the
//! dynamically-consistent pseudo-inverse.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

use super::contact::ContactConfig;
use super::effort::actuator_efforts;
use super::kinematics::{perp, Kinematics};
use super::model::{Configuration, JointKind, RobotModel};
use crate::error::{Error, Result};
use crate::linalg::{pinv, RANK_TOLERANCE};

/// Joint-space inertia matrix by composite-rigid-body assembly.
pub fn mass_matrix(model: &RobotModel, q: &Configuration) -> DMatrix<f64> {
    mass_matrix_with(model, &Kinematics::new(model, q))
}

/// Planar spatial inertia about the world origin, ordered `(ω, vx, vz)`.
fn spatial_inertia(mass: f64, inertia: f64, com: nalgebra::Vector2<f64>) -> Matrix3<f64> {
    let h = perp(com) * mass;
    Matrix3::new(
        inertia + mass * com.norm_squared(),
        h.x,
        h.y,
        h.x,
        mass,
        0.0,
        h.y,
        0.0,
        mass,
    )
}

fn motion_subspace(model: &RobotModel, kin: &Kinematics, dof: usize) -> Vector3<f64> {
    let j = model.dof_joint[dof];
    let p = kin.joint_points[j];
    match model.joints[j].kind {
        JointKind::FloatingPlanar => match dof - model.joints[j].dof.expect("floating dofs") {
            0 => Vector3::new(0.0, 1.0, 0.0),
            1 => Vector3::new(0.0, 0.0, 1.0),
            _ => Vector3::new(1.0, p.y, -p.x),
        },
        JointKind::Revolute => Vector3::new(1.0, p.y, -p.x),
        JointKind::Fixed => unreachable!("fixed joints own no dofs"),
    }
}

pub(crate) fn mass_matrix_with(model: &RobotModel, kin: &Kinematics) -> DMatrix<f64> {
    let n = model.dofs();
    let mut composite: Vec<Matrix3<f64>> = model
        .links
        .iter()
        .enumerate()
        .map(|(i, l)| spatial_inertia(l.mass, l.inertia, kin.com(model, i)))
        .collect();
    for &l in model.order.iter().rev() {
        if let Some(p) = model.links[l].parent {
            let child = composite[l];
            composite[p] += child;
        }
    }
    let body = |d: usize| model.joints[model.dof_joint[d]].child;
    let subspaces: Vec<Vector3<f64>> = (0..n).map(|d| motion_subspace(model, kin, d)).collect();
    let mut a = DMatrix::zeros(n, n);
    for j in 0..n {
        let bj = body(j);
        let force = composite[bj] * subspaces[j];
        for i in 0..=j {
            if model.chains[bj].contains(&body(i)) {
                let v = subspaces[i].dot(&force);
                a[(i, j)] = v;
                a[(j, i)] = v;
            } else if model.chains[body(i)].contains(&bj) {
                let v = subspaces[j].dot(&(composite[body(i)] * subspaces[i]));
                a[(i, j)] = v;
                a[(j, i)] = v;
            }
        }
    }
    a
}

/// Gradient of gravitational potential energy with respect to `q`.
pub fn gravity_vector(model: &RobotModel, q: &Configuration) -> DVector<f64> {
    gravity_vector_with(model, &Kinematics::new(model, q))
}

pub(crate) fn gravity_vector_with(model: &RobotModel, kin: &Kinematics) -> DVector<f64> {
    let mut g = DVector::zeros(model.dofs());
    for (i, link) in model.links.iter().enumerate() {
        let jac = kin.point_jacobian(model, i, &kin.com(model, i));
        g.axpy(link.mass * model.gravity, &jac.row(1).transpose(), 1.0);
    }
    g
}

/// Stacked Jacobian of the active contact frames.
pub fn contact_jacobian(model: &RobotModel, q: &Configuration, contact: &ContactConfig) -> DMatrix<f64> {
    contact.jacobian_with(model, &Kinematics::new(model, q))
}

fn mass_inverse(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    a.clone()
        .cholesky()
        .map(|c| c.inverse())
        .ok_or_else(|| Error::invalid("inertia matrix is not positive definite"))
}

/// `A⁻¹Xᵀ(XA⁻¹Xᵀ)†` given `A⁻¹`, with the rank of `X`.
pub(crate) fn dc_pinv_with_inverse(x: &DMatrix<f64>, a_inv: &DMatrix<f64>) -> (DMatrix<f64>, usize) {
    let ax = a_inv * x.transpose();
    let inner = x * &ax;
    let (inner_pinv, rank) = pinv(&inner, RANK_TOLERANCE);
    (ax * inner_pinv, rank)
}

/// Dynamically-consistent pseudo-inverse `X̄ = A⁻¹Xᵀ(XA⁻¹Xᵀ)†`.
pub fn dyn_consistent_pinv(x: &DMatrix<f64>, a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if a.nrows() != a.ncols() || a.ncols() != x.ncols() {
        return Err(Error::invalid("dimension mismatch between X and A"));
    }
    Ok(dc_pinv_with_inverse(x, &mass_inverse(a)?).0)
}

/// Contact null-space projector `N_c = I − J̄_c J_c`.
pub fn contact_nullspace(model: &RobotModel, q: &Configuration, contact: &ContactConfig) -> Result<DMatrix<f64>> {
    Ok(ConstrainedStatics::evaluate(model, q, contact)?.nullspace)
}

/// Actuation selector `S_a` (m × n): picks the actuated coordinates.
pub fn actuation_selector(model: &RobotModel) -> DMatrix<f64> {
    let m = model.actuated_dofs();
    let mut s = DMatrix::zeros(m, model.dofs());
    for k in 0..m {
        s[(k, model.base_dofs + k)] = 1.0;
    }
    s
}

/// Everything the statics of one configuration produces.
#[derive(Clone, Debug)]
pub struct ConstrainedStatics {
    pub mass: DMatrix<f64>,
    pub mass_inv: DMatrix<f64>,
    pub gravity: DVector<f64>,
    pub jacobian: DMatrix<f64>,
    /// `J̄_c`, n × k.
    pub jacobian_pinv: DMatrix<f64>,
    pub nullspace: DMatrix<f64>,
    pub contact_rank: usize,
}

impl ConstrainedStatics {
    pub fn evaluate(model: &RobotModel, q: &Configuration, contact: &ContactConfig) -> Result<Self> {
        model.check_configuration(q)?;
        let kin = Kinematics::new(model, q);
        let mass = mass_matrix_with(model, &kin);
        let mass_inv = mass_inverse(&mass)?;
        let gravity = gravity_vector_with(model, &kin);
        let jacobian = contact.jacobian_with(model, &kin);
        let n = model.dofs();
        let (jacobian_pinv, contact_rank) = dc_pinv_with_inverse(&jacobian, &mass_inv);
        let nullspace = DMatrix::identity(n, n) - &jacobian_pinv * &jacobian;
        Ok(Self {
            mass,
            mass_inv,
            gravity,
            jacobian,
            jacobian_pinv,
            nullspace,
            contact_rank,
        })
    }

    /// Gravity-compensating, contact-consistent torque at rest.
    pub fn torque(&self, model: &RobotModel, contact: &ContactConfig) -> Result<DVector<f64>> {
        let x = actuation_selector(model) * &self.nullspace;
        let (x_bar, actuated_rank) = dc_pinv_with_inverse(&x, &self.mass_inv);
        let free_rank = model.dofs() - self.contact_rank;
        if actuated_rank < free_rank {
            return Err(Error::ActuationDeficiency {
                contact: contact.name.clone(),
                actuated_rank,
                free_rank,
            });
        }
        Ok(x_bar.transpose() * (self.nullspace.transpose() * &self.gravity))
    }

    /// Reaction estimate `J̄_cᵀ(g − S_aᵀΓ)` at rest.
    pub fn reactions(&self, model: &RobotModel, torque: &DVector<f64>) -> DVector<f64> {
        let unbalanced = &self.gravity - actuation_selector(model).transpose() * torque;
        self.jacobian_pinv.transpose() * unbalanced
    }
}

/// Torque, reactions and actuator efforts at one configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct StaticsSolution {
    pub torque: DVector<f64>,
    pub reactions: DVector<f64>,
    pub efforts: DVector<f64>,
}

impl StaticsSolution {
    pub fn solve(model: &RobotModel, q: &Configuration, contact: &ContactConfig) -> Result<Self> {
        let statics = ConstrainedStatics::evaluate(model, q, contact)?;
        let torque = statics.torque(model, contact)?;
        let reactions = statics.reactions(model, &torque);
        let efforts = actuator_efforts(model, q, &torque)?;
        Ok(Self {
            torque,
            reactions,
            efforts,
        })
    }
}

/// `Γ(q) = (S_a N_c)̄ᵀ N_cᵀ g(q)`.
pub fn static_torque(model: &RobotModel, q: &Configuration, contact: &ContactConfig) -> Result<DVector<f64>> {
    ConstrainedStatics::evaluate(model, q, contact)?.torque(model, contact)
}

/// Contact reactions supporting `torque` at rest; empty without contacts.
pub fn reaction_forces(
    model: &RobotModel,
    q: &Configuration,
    contact: &ContactConfig,
    torque: &DVector<f64>,
) -> Result<DVector<f64>> {
    Ok(ConstrainedStatics::evaluate(model, q, contact)?.reactions(model, torque))
}
