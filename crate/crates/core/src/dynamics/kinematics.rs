//! Forward kinematics and Jacobians in the sagittal (x, z) plane.
//!
//! Rotations are counter-clockwise positive. Jacobian rows are ordered
//! `(vx, vz, ω)`.

use nalgebra::{DMatrix, Matrix2, Vector2};

use super::model::{Configuration, JointKind, RobotModel};

#[inline]
pub fn rotation(angle: f64) -> Matrix2<f64> {
    let (s, c) = angle.sin_cos();
    Matrix2::new(c, -s, s, c)
}

/// Velocity of a point at relative position `r` under unit rotation rate.
#[inline]
pub fn perp(r: Vector2<f64>) -> Vector2<f64> {
    Vector2::new(-r.y, r.x)
}

/// Planar pose of a frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose {
    pub position: Vector2<f64>,
    pub angle: f64,
}

impl Pose {
    pub fn transform_point(&self, local: &Vector2<f64>) -> Vector2<f64> {
        self.position + rotation(self.angle) * local
    }
}

/// Link poses and joint axis locations at one configuration.
#[derive(Clone, Debug)]
pub struct Kinematics {
    pub link_poses: Vec<Pose>,
    /// World location of each joint's rotation axis.
    pub joint_points: Vec<Vector2<f64>>,
}

impl Kinematics {
    pub fn new(model: &RobotModel, q: &Configuration) -> Self {
        let mut link_poses = vec![
            Pose {
                position: Vector2::zeros(),
                angle: 0.0
            };
            model.links.len()
        ];
        let mut joint_points = vec![Vector2::zeros(); model.joints.len()];
        for &l in &model.order {
            let j = model.links[l].joint;
            let joint = &model.joints[j];
            let parent = joint.parent.map(|p| link_poses[p]).unwrap_or(Pose {
                position: Vector2::zeros(),
                angle: 0.0,
            });
            let anchor = parent.transform_point(&joint.origin);
            let pose = match joint.kind {
                JointKind::FloatingPlanar => {
                    let d = joint.dof.expect("floating joint owns dofs");
                    Pose {
                        position: anchor + Vector2::new(q[d], q[d + 1]),
                        angle: parent.angle + q[d + 2],
                    }
                }
                JointKind::Revolute => Pose {
                    position: anchor,
                    angle: parent.angle + q[joint.dof.expect("revolute joint owns a dof")],
                },
                JointKind::Fixed => Pose {
                    position: anchor,
                    angle: parent.angle,
                },
            };
            joint_points[j] = pose.position;
            link_poses[l] = pose;
        }
        Self {
            link_poses,
            joint_points,
        }
    }

    pub fn com(&self, model: &RobotModel, link: usize) -> Vector2<f64> {
        self.link_poses[link].transform_point(&model.links[link].com)
    }

    /// `(vx, vz, ω)` Jacobian of a world point rigidly attached to `link`.
    pub fn point_jacobian(&self, model: &RobotModel, link: usize, point: &Vector2<f64>) -> DMatrix<f64> {
        let mut jac = DMatrix::zeros(3, model.dofs());
        for &l in &model.chains[link] {
            let j = model.links[l].joint;
            let joint = &model.joints[j];
            let Some(d) = joint.dof else { continue };
            match joint.kind {
                JointKind::FloatingPlanar => {
                    jac[(0, d)] = 1.0;
                    jac[(1, d + 1)] = 1.0;
                    let v = perp(point - self.joint_points[j]);
                    jac[(0, d + 2)] = v.x;
                    jac[(1, d + 2)] = v.y;
                    jac[(2, d + 2)] = 1.0;
                }
                JointKind::Revolute => {
                    let v = perp(point - self.joint_points[j]);
                    jac[(0, d)] = v.x;
                    jac[(1, d)] = v.y;
                    jac[(2, d)] = 1.0;
                }
                JointKind::Fixed => {}
            }
        }
        jac
    }

    /// Pose of a contact frame.
    pub fn frame_pose(&self, model: &RobotModel, frame: usize) -> Pose {
        let f = &model.contacts[frame];
        let link = self.link_poses[f.link];
        Pose {
            position: link.transform_point(&f.offset),
            angle: link.angle,
        }
    }

    /// Whole-body center of mass.
    pub fn center_of_mass(&self, model: &RobotModel) -> Vector2<f64> {
        let total = model.total_mass();
        model
            .links
            .iter()
            .enumerate()
            .map(|(i, l)| self.com(model, i) * l.mass)
            .sum::<Vector2<f64>>()
            / total
    }
}

/// Gravitational potential energy, J.
pub fn potential_energy(model: &RobotModel, q: &Configuration) -> f64 {
    let kin = Kinematics::new(model, q);
    model
        .links
        .iter()
        .enumerate()
        .map(|(i, l)| l.mass * model.gravity * kin.com(model, i).y)
        .sum()
}
