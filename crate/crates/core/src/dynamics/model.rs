//! Planar robot description and its validated, index-resolved form.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use nalgebra::{DVector, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const WORLD: &str = "world";

/// Generalized coordinates `(x, z, θ, joint angles...)`.
pub type Configuration = DVector<f64>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub name: String,
    #[serde(default = "default_gravity")]
    pub gravity: f64,
    #[serde(default)]
    pub links: Vec<LinkDoc>,
    #[serde(default)]
    pub joints: Vec<JointDoc>,
    #[serde(default)]
    pub actuators: Vec<ActuatorDoc>,
    #[serde(default)]
    pub contacts: Vec<ContactDoc>,
}

fn default_gravity() -> f64 {
    9.81
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkDoc {
    pub name: String,
    pub mass: f64,
    /// Center of mass in the link frame, m.
    #[serde(default)]
    pub com: [f64; 2],
    /// Rotational inertia about the center of mass, kg·m².
    pub inertia: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JointKind {
    /// Planar floating base: `x`, `z` translation and rotation `θ`.
    FloatingPlanar,
    Revolute,
    Fixed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointDoc {
    pub name: String,
    pub kind: JointKind,
    pub parent: String,
    pub child: String,
    /// Joint location in the parent frame, m.
    #[serde(default)]
    pub origin: [f64; 2],
    /// Lower and upper angle limits, rad.
    #[serde(default)]
    pub limits: Option<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ActuatorDoc {
    /// One rotary actuator, one-to-one with a revolute joint.
    Direct { id: String, joint: String },
    /// Two linear pushrods driving a (pitch, roll) joint pair through a
    /// lever mechanism.
    LeverPair {
        ids: [String; 2],
        joints: [String; 2],
        lever_arm: f64,
        separation: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    /// Position only: two rows.
    Point,
    /// Position and orientation: three rows.
    Flat,
}

impl ConstraintKind {
    pub fn rows(self) -> usize {
        match self {
            ConstraintKind::Point => 2,
            ConstraintKind::Flat => 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContactDoc {
    pub name: String,
    pub link: String,
    #[serde(default)]
    pub offset: [f64; 2],
    pub kind: ConstraintKind,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Link {
    pub name: String,
    pub mass: f64,
    pub com: Vector2<f64>,
    pub inertia: f64,
    /// Joint whose child this link is.
    pub joint: usize,
    pub parent: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Joint {
    pub name: String,
    pub kind: JointKind,
    pub parent: Option<usize>,
    pub child: usize,
    pub origin: Vector2<f64>,
    pub limits: (f64, f64),
    /// First generalized coordinate owned by this joint, if any.
    pub dof: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ActuatorMap {
    Direct {
        id: String,
        joint: usize,
    },
    LeverPair {
        ids: [String; 2],
        pitch: usize,
        roll: usize,
        lever_arm: f64,
        separation: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContactFrame {
    pub name: String,
    pub link: usize,
    pub offset: Vector2<f64>,
    pub kind: ConstraintKind,
}

/// Validated planar kinematic tree.
#[derive(Clone, Debug, PartialEq)]
pub struct RobotModel {
    pub name: String,
    pub gravity: f64,
    pub links: Vec<Link>,
    pub joints: Vec<Joint>,
    pub actuators: Vec<ActuatorMap>,
    pub contacts: Vec<ContactFrame>,
    /// Links in parent-before-child order.
    pub order: Vec<usize>,
    /// Joint owning each generalized coordinate.
    pub dof_joint: Vec<usize>,
    pub base_dofs: usize,
    /// Ancestor-or-self links of every link, root first.
    pub chains: Vec<Vec<usize>>,
}

fn located(section: &str, index: usize, name: &str) -> Option<String> {
    format!("{section}[{index}] `{name}`").into()
}

fn check_unique<'a>(section: &str, names: impl Iterator<Item = &'a str>) -> Result<HashMap<&'a str, usize>> {
    let mut map = HashMap::new();
    for (i, name) in names.enumerate() {
        if name.is_empty() {
            return Err(Error::schema(Some(format!("{section}[{i}]")), "empty name"));
        }
        if map.insert(name, i).is_some() {
            return Err(Error::schema(located(section, i, name), format!("duplicate name `{name}`")));
        }
    }
    Ok(map)
}

fn finite2(v: [f64; 2], loc: Option<String>, what: &str) -> Result<Vector2<f64>> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(Vector2::new(v[0], v[1]))
    } else {
        Err(Error::schema(loc, format!("{what} must be finite")))
    }
}

impl RobotModel {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let doc: ModelDocument = toml::from_str(text).map_err(|e| Error::schema(None, e.to_string()))?;
        Self::from_document(&doc)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Schema { location, message } => Error::Schema {
                location: Some(match location {
                    Some(l) => format!("{}: {l}", path.display()),
                    None => path.display().to_string(),
                }),
                message,
            },
            other => other,
        })
    }

    pub fn from_document(doc: &ModelDocument) -> Result<Self> {
        if !(doc.gravity >= 0.0) || !doc.gravity.is_finite() {
            return Err(Error::schema(Some("gravity".into()), "gravity must be finite and non-negative"));
        }
        let link_idx = check_unique("links", doc.links.iter().map(|l| l.name.as_str()))?;
        check_unique("joints", doc.joints.iter().map(|j| j.name.as_str()))?;
        check_unique("contacts", doc.contacts.iter().map(|c| c.name.as_str()))?;
        if link_idx.contains_key(WORLD) {
            return Err(Error::schema(Some("links".into()), "`world` is reserved"));
        }
        if doc.links.is_empty() {
            return Err(Error::schema(Some("links".into()), "model has no links"));
        }

        let mut links = Vec::with_capacity(doc.links.len());
        for (i, l) in doc.links.iter().enumerate() {
            let loc = located("links", i, &l.name);
            if !(l.mass > 0.0) || !l.mass.is_finite() {
                return Err(Error::schema(loc, format!("mass must be positive, got {}", l.mass)));
            }
            if !(l.inertia >= 0.0) || !l.inertia.is_finite() {
                return Err(Error::schema(loc, format!("inertia must be non-negative, got {}", l.inertia)));
            }
            links.push(Link {
                name: l.name.clone(),
                mass: l.mass,
                com: finite2(l.com, loc, "com")?,
                inertia: l.inertia,
                joint: usize::MAX,
                parent: None,
            });
        }

        let mut joints = Vec::with_capacity(doc.joints.len());
        let mut root_joint = None;
        for (i, j) in doc.joints.iter().enumerate() {
            let loc = located("joints", i, &j.name);
            let child = *link_idx
                .get(j.child.as_str())
                .ok_or_else(|| Error::schema(loc.clone(), format!("unknown child link `{}`", j.child)))?;
            let parent = if j.parent == WORLD {
                if root_joint.replace(i).is_some() {
                    return Err(Error::Topology(format!(
                        "joint `{}` attaches a second root to the world",
                        j.name
                    )));
                }
                None
            } else {
                Some(
                    *link_idx
                        .get(j.parent.as_str())
                        .ok_or_else(|| Error::schema(loc.clone(), format!("unknown parent link `{}`", j.parent)))?,
                )
            };
            if j.kind == JointKind::FloatingPlanar && parent.is_some() {
                return Err(Error::schema(loc, "a floating_planar joint must attach to `world`"));
            }
            if links[child].joint != usize::MAX {
                return Err(Error::Topology(format!(
                    "link `{}` has more than one parent joint (second: `{}`)",
                    j.child, j.name
                )));
            }
            links[child].joint = i;
            links[child].parent = parent;
            let limits = match j.limits {
                Some([lo, hi]) => {
                    if j.kind != JointKind::Revolute {
                        return Err(Error::schema(loc, "limits are only allowed on revolute joints"));
                    }
                    if !(lo < hi) || lo.is_nan() || hi.is_nan() {
                        return Err(Error::schema(loc, format!("invalid limits [{lo}, {hi}]")));
                    }
                    (lo, hi)
                }
                None => (f64::NEG_INFINITY, f64::INFINITY),
            };
            joints.push(Joint {
                name: j.name.clone(),
                kind: j.kind,
                parent,
                child,
                origin: finite2(j.origin, loc, "origin")?,
                limits,
                dof: None,
            });
        }
        if root_joint.is_none() {
            return Err(Error::Topology("no joint attaches the tree to `world`".into()));
        }
        if let Some(orphan) = links.iter().find(|l| l.joint == usize::MAX) {
            return Err(Error::Topology(format!("link `{}` has no parent joint", orphan.name)));
        }

        // Walk from the root; anything unreached sits on a loop.
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); links.len()];
        let mut root_link = None;
        for joint in &joints {
            match joint.parent {
                Some(p) => children[p].push(joint.child),
                None => root_link = Some(joint.child),
            }
        }
        let mut order = Vec::with_capacity(links.len());
        let mut stack = vec![root_link.expect("root checked")];
        let mut seen = HashSet::new();
        while let Some(l) = stack.pop() {
            if !seen.insert(l) {
                return Err(Error::Topology(format!("kinematic loop through link `{}`", links[l].name)));
            }
            order.push(l);
            for &c in children[l].iter().rev() {
                stack.push(c);
            }
        }
        if order.len() != links.len() {
            let stray = (0..links.len()).find(|l| !seen.contains(l)).expect("some link unreached");
            return Err(Error::Topology(format!(
                "link `{}` is not connected to the world (kinematic loop)",
                links[stray].name
            )));
        }

        // Coordinates: floating base first, then revolute joints in declaration order.
        let mut dof_joint = Vec::new();
        let mut base_dofs = 0;
        if let Some(r) = root_joint {
            if joints[r].kind == JointKind::FloatingPlanar {
                joints[r].dof = Some(0);
                dof_joint.extend([r, r, r]);
                base_dofs = 3;
            }
        }
        for (i, joint) in joints.iter_mut().enumerate() {
            if joint.kind == JointKind::Revolute {
                joint.dof = Some(dof_joint.len());
                dof_joint.push(i);
            }
        }

        let chains = (0..links.len())
            .map(|l| {
                let mut chain = vec![l];
                let mut cur = links[l].parent;
                while let Some(p) = cur {
                    chain.push(p);
                    cur = links[p].parent;
                }
                chain.reverse();
                chain
            })
            .collect();

        let joint_idx: HashMap<&str, usize> = joints.iter().enumerate().map(|(i, j)| (j.name.as_str(), i)).collect();
        let revolute = |loc: &Option<String>, name: &str| -> Result<usize> {
            let j = *joint_idx
                .get(name)
                .ok_or_else(|| Error::schema(loc.clone(), format!("unknown joint `{name}`")))?;
            if joints[j].kind != JointKind::Revolute {
                return Err(Error::schema(loc.clone(), format!("joint `{name}` is not revolute")));
            }
            Ok(j)
        };
        let mut actuators = Vec::with_capacity(doc.actuators.len());
        let mut bound = vec![false; joints.len()];
        let mut ids = HashSet::new();
        for (i, a) in doc.actuators.iter().enumerate() {
            let (label, names): (String, Vec<&String>) = match a {
                ActuatorDoc::Direct { id, .. } => (id.clone(), vec![id]),
                ActuatorDoc::LeverPair { ids, .. } => (ids.join("+"), ids.iter().collect()),
            };
            let loc = located("actuators", i, &label);
            for name in names {
                if !ids.insert(name.clone()) {
                    return Err(Error::schema(loc, format!("duplicate actuator id `{name}`")));
                }
            }
            let map = match a {
                ActuatorDoc::Direct { id, joint } => ActuatorMap::Direct {
                    id: id.clone(),
                    joint: revolute(&loc, joint)?,
                },
                ActuatorDoc::LeverPair {
                    ids,
                    joints: pair,
                    lever_arm,
                    separation,
                } => {
                    if !(*lever_arm > 0.0 && *separation > 0.0) {
                        return Err(Error::schema(loc, "lever_arm and separation must be positive"));
                    }
                    let pitch = revolute(&loc, &pair[0])?;
                    let roll = revolute(&loc, &pair[1])?;
                    if pitch == roll {
                        return Err(Error::schema(loc, "lever pair needs two distinct joints"));
                    }
                    ActuatorMap::LeverPair {
                        ids: ids.clone(),
                        pitch,
                        roll,
                        lever_arm: *lever_arm,
                        separation: *separation,
                    }
                }
            };
            let driven: Vec<usize> = match &map {
                ActuatorMap::Direct { joint, .. } => vec![*joint],
                ActuatorMap::LeverPair { pitch, roll, .. } => vec![*pitch, *roll],
            };
            for j in driven {
                if std::mem::replace(&mut bound[j], true) {
                    return Err(Error::schema(loc, format!("joint `{}` is driven twice", joints[j].name)));
                }
            }
            actuators.push(map);
        }
        if let Some(j) = joints.iter().enumerate().find(|(i, j)| j.kind == JointKind::Revolute && !bound[*i]) {
            return Err(Error::schema(
                Some("actuators".into()),
                format!("revolute joint `{}` has no actuator", j.1.name),
            ));
        }

        let mut contacts = Vec::with_capacity(doc.contacts.len());
        for (i, c) in doc.contacts.iter().enumerate() {
            let loc = located("contacts", i, &c.name);
            let link = *link_idx
                .get(c.link.as_str())
                .ok_or_else(|| Error::schema(loc.clone(), format!("unknown link `{}`", c.link)))?;
            contacts.push(ContactFrame {
                name: c.name.clone(),
                link,
                offset: finite2(c.offset, loc, "offset")?,
                kind: c.kind,
            });
        }

        Ok(Self {
            name: doc.name.clone(),
            gravity: doc.gravity,
            links,
            joints,
            actuators,
            contacts,
            order,
            dof_joint,
            base_dofs,
            chains,
        })
    }

    /// Number of generalized coordinates.
    pub fn dofs(&self) -> usize {
        self.dof_joint.len()
    }

    /// Number of actuated coordinates (one torque each).
    pub fn actuated_dofs(&self) -> usize {
        self.dofs() - self.base_dofs
    }

    pub fn total_mass(&self) -> f64 {
        self.links.iter().map(|l| l.mass).sum()
    }

    pub fn link_index(&self, name: &str) -> Option<usize> {
        self.links.iter().position(|l| l.name == name)
    }

    pub fn joint_index(&self, name: &str) -> Option<usize> {
        self.joints.iter().position(|j| j.name == name)
    }

    pub fn contact_index(&self, name: &str) -> Option<usize> {
        self.contacts.iter().position(|c| c.name == name)
    }

    /// Coordinate index of a revolute joint.
    pub fn joint_dof(&self, name: &str) -> Option<usize> {
        self.joint_index(name).and_then(|j| self.joints[j].dof)
    }

    /// Actuator ids in effort-vector order.
    pub fn actuator_ids(&self) -> Vec<String> {
        self.actuators
            .iter()
            .flat_map(|a| match a {
                ActuatorMap::Direct { id, .. } => vec![id.clone()],
                ActuatorMap::LeverPair { ids, .. } => ids.to_vec(),
            })
            .collect()
    }

    pub fn zero_configuration(&self) -> Configuration {
        DVector::zeros(self.dofs())
    }

    /// Checks length, finiteness and joint limits of `q`.
    pub fn check_configuration(&self, q: &Configuration) -> Result<()> {
        if q.len() != self.dofs() {
            return Err(Error::invalid(format!(
                "configuration has {} entries, model `{}` has {} dofs",
                q.len(),
                self.name,
                self.dofs()
            )));
        }
        if q.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("configuration must be finite"));
        }
        for joint in &self.joints {
            if let (JointKind::Revolute, Some(d)) = (joint.kind, joint.dof) {
                let (lo, hi) = joint.limits;
                if q[d] < lo - 1e-12 || q[d] > hi + 1e-12 {
                    return Err(Error::invalid(format!(
                        "joint `{}` at {} rad outside limits [{lo}, {hi}]",
                        joint.name, q[d]
                    )));
                }
            }
        }
        Ok(())
    }

    /// Clamp revolute coordinates into their limits; reports whether any moved.
    pub fn clamp_to_limits(&self, q: &mut Configuration) -> bool {
        let mut clamped = false;
        for joint in &self.joints {
            if let (JointKind::Revolute, Some(d)) = (joint.kind, joint.dof) {
                let (lo, hi) = joint.limits;
                let v = q[d].clamp(lo, hi);
                if v != q[d] {
                    q[d] = v;
                    clamped = true;
                }
            }
        }
        clamped
    }

    /// Block of each coordinate for step-size scaling.
    pub fn dof_block(&self, dof: usize) -> DofBlock {
        if dof < self.base_dofs {
            if dof < 2 {
                DofBlock::BaseLinear
            } else {
                DofBlock::BaseRotary
            }
        } else {
            DofBlock::Actuated
        }
    }
}

/// Coordinate groups that share one descent gain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DofBlock {
    Actuated,
    BaseLinear,
    BaseRotary,
}
