//! Kinematic tree description and its text format.
//!
//! A model file is UTF-8 text made of `link`, `joint`, `frame` and `limits`
//! blocks, each closed by `end`. Blank lines and `#` comments are ignored.
//! All quantities are SI.
//!
//! ```text
//! link base
//!   mass 92
//!   com 0 0 0
//!   inertia 2.0 6.0 7.0 0 0 0     # ixx iyy izz ixy ixz iyz about the com
//! end
//!
//! joint floating_base
//!   type floating
//!   child base
//! end
//!
//! joint lf_haa
//!   type revolute
//!   group leg                     # leg | arm
//!   parent base
//!   child lf_hip
//!   origin 0.37 0.21 0            # joint position in the parent link frame
//!   rpy 0 0 0                     # optional fixed rotation of the joint frame
//!   axis 1 0 0                    # in the child link frame
//!   home 0.0                      # optional initial position
//! end
//!
//! limits lf_haa
//!   position -1.2 1.2
//!   torque -150 150
//! end
//!
//! frame LF
//!   link lf_lower
//!   offset 0 0 -0.35
//! end
//! ```
//!
//! Joints are ordered as they appear; every leg joint must precede every arm
//! joint and a joint's parent link must already be attached to the tree. The
//! root link gets an implicit frame `B` at its origin.

use std::collections::{HashMap, HashSet};
use std::path::Path;
use std::str::FromStr;

use nalgebra::{Rotation3, SymmetricEigen};
use thiserror::Error;

use super::spatial::{spatial_inertia, Mat3, SpatialMat, Transform, Vec3};

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{item}: {msg}")]
    Invalid { item: String, msg: String },
    #[error("unknown frame `{0}`")]
    UnknownFrame(String),
    #[error("reading model file: {0}")]
    Io(String),
}

fn invalid(item: &str, msg: impl Into<String>) -> ModelError {
    ModelError::Invalid {
        item: item.to_string(),
        msg: msg.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JointGroup {
    Leg,
    Arm,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JointKind {
    Floating,
    Revolute { axis: Vec3 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointLimits {
    pub q_min: f64,
    pub q_max: f64,
    pub tau_min: f64,
    pub tau_max: f64,
}

impl Default for JointLimits {
    fn default() -> Self {
        Self {
            q_min: f64::NEG_INFINITY,
            q_max: f64::INFINITY,
            tau_min: f64::NEG_INFINITY,
            tau_max: f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub name: String,
    pub joint_name: String,
    pub parent: Option<usize>,
    pub kind: JointKind,
    pub group: Option<JointGroup>,
    /// Parent link frame to joint frame.
    pub tree: Transform,
    pub mass: f64,
    pub com: Vec3,
    pub inertia_com: Mat3,
    pub inertia: SpatialMat,
    pub home: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub name: String,
    pub link: usize,
    pub offset: Vec3,
}

/// Floating-base kinematic tree. Link 0 is the floating base; link `i > 0`
/// is moved by actuated joint `i - 1`, whose velocity sits at index `5 + i`
/// of the generalized velocity.
#[derive(Debug, Clone, PartialEq)]
pub struct RobotModel {
    links: Vec<Link>,
    frames: Vec<Frame>,
    limits: Vec<JointLimits>,
    n_leg: usize,
    n_arm: usize,
}

impl RobotModel {
    /// The bundled quadruped-with-arm model.
    pub fn hyq_arm() -> Self {
        include_str!("../../models/hyq_arm.model")
            .parse()
            .expect("bundled model is valid")
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| ModelError::Io(format!("{}: {e}", path.as_ref().display())))?;
        text.parse()
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn limits(&self) -> &[JointLimits] {
        &self.limits
    }

    pub fn n_links(&self) -> usize {
        self.links.len()
    }

    pub fn n_joints(&self) -> usize {
        self.links.len() - 1
    }

    pub fn n_leg(&self) -> usize {
        self.n_leg
    }

    pub fn n_arm(&self) -> usize {
        self.n_arm
    }

    /// Size of the generalized velocity.
    pub fn dof(&self) -> usize {
        6 + self.n_joints()
    }

    pub fn total_mass(&self) -> f64 {
        self.links.iter().map(|l| l.mass).sum()
    }

    pub fn frame_index(&self, name: &str) -> Result<usize, ModelError> {
        self.frames
            .iter()
            .position(|f| f.name == name)
            .ok_or_else(|| ModelError::UnknownFrame(name.to_string()))
    }

    pub fn frame(&self, index: usize) -> &Frame {
        &self.frames[index]
    }

    /// Chain of links from `link` up to (and including) the root.
    pub fn ancestors(&self, link: usize) -> impl Iterator<Item = usize> + '_ {
        std::iter::successors(Some(link), move |&l| self.links[l].parent)
    }

    pub fn home_positions(&self) -> Vec<f64> {
        self.links[1..].iter().map(|l| l.home).collect()
    }

    /// Velocity index of the joint moving `link`, `None` for the base.
    pub fn velocity_index(link: usize) -> Option<usize> {
        (link > 0).then(|| 5 + link)
    }
}

impl FromStr for RobotModel {
    type Err = ModelError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let blocks = parse_blocks(text)?;
        build(blocks)
    }
}

#[derive(Debug)]
struct Block {
    kind: String,
    name: String,
    line: usize,
    entries: Vec<(usize, String, Vec<String>)>,
}

impl Block {
    fn get(&self, key: &str) -> Option<(usize, &[String])> {
        self.entries
            .iter()
            .find(|(_, k, _)| k == key)
            .map(|(l, _, v)| (*l, v.as_slice()))
    }

    fn numbers<const N: usize>(&self, key: &str) -> Result<Option<[f64; N]>, ModelError> {
        let Some((line, vals)) = self.get(key) else {
            return Ok(None);
        };
        if vals.len() != N {
            return Err(ModelError::Parse {
                line,
                msg: format!("`{key}` expects {N} numbers, got {}", vals.len()),
            });
        }
        let mut out = [0.0; N];
        for (o, v) in out.iter_mut().zip(vals) {
            *o = v.parse::<f64>().map_err(|_| ModelError::Parse {
                line,
                msg: format!("`{key}`: `{v}` is not a number"),
            })?;
            if !o.is_finite() && key != "position" && key != "torque" {
                return Err(ModelError::Parse {
                    line,
                    msg: format!("`{key}`: non-finite value"),
                });
            }
        }
        Ok(Some(out))
    }

    fn word(&self, key: &str) -> Result<Option<&str>, ModelError> {
        match self.get(key) {
            None => Ok(None),
            Some((_, [v])) => Ok(Some(v.as_str())),
            Some((line, _)) => Err(ModelError::Parse {
                line,
                msg: format!("`{key}` expects one word"),
            }),
        }
    }

    fn require_word(&self, key: &str) -> Result<&str, ModelError> {
        self.word(key)?.ok_or_else(|| ModelError::Parse {
            line: self.line,
            msg: format!("{} `{}` is missing `{key}`", self.kind, self.name),
        })
    }

    fn require_numbers<const N: usize>(&self, key: &str) -> Result<[f64; N], ModelError> {
        self.numbers::<N>(key)?.ok_or_else(|| ModelError::Parse {
            line: self.line,
            msg: format!("{} `{}` is missing `{key}`", self.kind, self.name),
        })
    }
}

const BLOCK_KINDS: [&str; 4] = ["link", "joint", "frame", "limits"];

fn parse_blocks(text: &str) -> Result<Vec<Block>, ModelError> {
    let mut blocks = Vec::new();
    let mut current: Option<Block> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut words = content.split_whitespace();
        let head = words.next().unwrap_or_default();
        let rest: Vec<String> = words.map(str::to_string).collect();
        match (&mut current, head) {
            (None, kind) if BLOCK_KINDS.contains(&kind) => {
                let [name] = rest.as_slice() else {
                    return Err(ModelError::Parse {
                        line,
                        msg: format!("`{kind}` needs exactly one name"),
                    });
                };
                current = Some(Block {
                    kind: kind.to_string(),
                    name: name.clone(),
                    line,
                    entries: Vec::new(),
                });
            }
            (None, other) => {
                return Err(ModelError::Parse {
                    line,
                    msg: format!("expected a block keyword, found `{other}`"),
                })
            }
            (Some(_), "end") => blocks.push(current.take().expect("open block")),
            (Some(b), kind) if BLOCK_KINDS.contains(&kind) && !(kind == "link" && b.kind == "frame") => {
                return Err(ModelError::Parse {
                    line,
                    msg: format!("`{kind}` inside unterminated {} `{}`", b.kind, b.name),
                })
            }
            (Some(b), key) => {
                if b.entries.iter().any(|(_, k, _)| k == key) {
                    return Err(ModelError::Parse {
                        line,
                        msg: format!("duplicate key `{key}`"),
                    });
                }
                b.entries.push((line, key.to_string(), rest));
            }
        }
    }
    if let Some(b) = current {
        return Err(ModelError::Parse {
            line: b.line,
            msg: format!("{} `{}` is not closed by `end`", b.kind, b.name),
        });
    }
    Ok(blocks)
}

struct LinkData {
    mass: f64,
    com: Vec3,
    inertia: Mat3,
}

struct JointData<'a> {
    block: &'a Block,
    kind: JointKind,
    group: Option<JointGroup>,
    parent: Option<&'a str>,
    child: &'a str,
    tree: Transform,
    home: f64,
}

fn build(blocks: Vec<Block>) -> Result<RobotModel, ModelError> {
    let mut link_data: HashMap<&str, LinkData> = HashMap::new();
    let mut link_order: Vec<&str> = Vec::new();
    let mut joints: Vec<JointData> = Vec::new();
    let mut frame_blocks = Vec::new();
    let mut limit_blocks = Vec::new();

    for b in &blocks {
        match b.kind.as_str() {
            "link" => {
                if link_data.contains_key(b.name.as_str()) {
                    return Err(ModelError::Parse {
                        line: b.line,
                        msg: format!("duplicate link `{}`", b.name),
                    });
                }
                let mass = b.require_numbers::<1>("mass")?[0];
                let com = b.numbers::<3>("com")?.unwrap_or([0.0; 3]);
                let [ixx, iyy, izz, ixy, ixz, iyz] = b.require_numbers::<6>("inertia")?;
                let inertia = Mat3::new(ixx, ixy, ixz, ixy, iyy, iyz, ixz, iyz, izz);
                if mass <= 0.0 {
                    return Err(invalid(&b.name, "mass must be positive"));
                }
                let eig = SymmetricEigen::new(inertia).eigenvalues;
                if eig.iter().any(|&e| e <= 0.0) {
                    return Err(invalid(&b.name, "rotational inertia must be positive definite"));
                }
                link_order.push(&b.name);
                link_data.insert(
                    &b.name,
                    LinkData {
                        mass,
                        com: Vec3::from(com),
                        inertia,
                    },
                );
            }
            "joint" => {
                let kind = match b.require_word("type")? {
                    "floating" => JointKind::Floating,
                    "revolute" => {
                        let axis = Vec3::from(b.require_numbers::<3>("axis")?);
                        let n = axis.norm();
                        if n < 1e-12 {
                            return Err(invalid(&b.name, "joint axis must be non-zero"));
                        }
                        JointKind::Revolute { axis: axis / n }
                    }
                    other => {
                        return Err(ModelError::Parse {
                            line: b.get("type").map(|(l, _)| l).unwrap_or(b.line),
                            msg: format!("unknown joint type `{other}`"),
                        })
                    }
                };
                let group = match b.word("group")? {
                    None => None,
                    Some("leg") => Some(JointGroup::Leg),
                    Some("arm") => Some(JointGroup::Arm),
                    Some(other) => {
                        return Err(ModelError::Parse {
                            line: b.get("group").map(|(l, _)| l).unwrap_or(b.line),
                            msg: format!("unknown joint group `{other}`"),
                        })
                    }
                };
                let origin = Vec3::from(b.numbers::<3>("origin")?.unwrap_or([0.0; 3]));
                let [r, p, y] = b.numbers::<3>("rpy")?.unwrap_or([0.0; 3]);
                // parent-to-joint coordinate rotation is the transpose of the
                // joint frame's orientation in the parent
                let orient = Rotation3::from_euler_angles(r, p, y);
                let tree = Transform::new(orient.matrix().transpose(), origin);
                let home = b.numbers::<1>("home")?.map(|h| h[0]).unwrap_or(0.0);
                joints.push(JointData {
                    block: b,
                    kind,
                    group,
                    parent: b.word("parent")?,
                    child: b.require_word("child")?,
                    tree,
                    home,
                });
            }
            "frame" => frame_blocks.push(b),
            "limits" => limit_blocks.push(b),
            _ => unreachable!(),
        }
    }

    // one moving joint per link
    let mut joint_of_child: HashMap<&str, usize> = HashMap::new();
    for (i, j) in joints.iter().enumerate() {
        if !link_data.contains_key(j.child) {
            return Err(invalid(&j.block.name, format!("child link `{}` is not defined", j.child)));
        }
        if let Some(p) = j.parent {
            if !link_data.contains_key(p) {
                return Err(invalid(&j.block.name, format!("parent link `{p}` is not defined")));
            }
        }
        if joint_of_child.insert(j.child, i).is_some() {
            return Err(invalid(j.child, "link is the child of more than one joint"));
        }
    }

    // cycle detection over the parent relation
    for j in &joints {
        let mut seen = HashSet::new();
        let mut cur = j.child;
        while let Some(&ji) = joint_of_child.get(cur) {
            if !seen.insert(cur) {
                return Err(invalid(&j.block.name, format!("cyclic parent reference through link `{cur}`")));
            }
            match joints[ji].parent {
                Some(p) => cur = p,
                None => break,
            }
        }
    }

    let floating: Vec<&JointData> = joints
        .iter()
        .filter(|j| j.kind == JointKind::Floating)
        .collect();
    let [root_joint] = floating.as_slice() else {
        return Err(invalid("model", format!("expected exactly one floating joint, found {}", floating.len())));
    };
    if root_joint.parent.is_some() {
        return Err(invalid(&root_joint.block.name, "floating joint cannot have a parent"));
    }
    if !std::ptr::eq(*root_joint, &joints[0]) {
        return Err(invalid(&root_joint.block.name, "floating joint must be the first joint"));
    }

    for name in &link_order {
        if !joint_of_child.contains_key(name) {
            return Err(invalid(name, "link is not attached to the tree by any joint"));
        }
    }

    let mut index_of: HashMap<&str, usize> = HashMap::new();
    let mut links = Vec::with_capacity(joints.len());
    let mut seen_arm = false;
    let (mut n_leg, mut n_arm) = (0, 0);
    for j in &joints {
        let parent = match j.parent {
            None => None,
            Some(p) => Some(*index_of.get(p).ok_or_else(|| {
                invalid(&j.block.name, format!("parent link `{p}` must be attached before its children"))
            })?),
        };
        if j.kind != JointKind::Floating {
            if parent.is_none() {
                return Err(invalid(&j.block.name, "revolute joint needs a parent"));
            }
            match j.group {
                Some(JointGroup::Leg) if seen_arm => {
                    return Err(invalid(&j.block.name, "leg joints must precede arm joints"))
                }
                Some(JointGroup::Leg) => n_leg += 1,
                Some(JointGroup::Arm) => {
                    seen_arm = true;
                    n_arm += 1
                }
                None => return Err(invalid(&j.block.name, "revolute joint needs `group leg|arm`")),
            }
        }
        let d = &link_data[j.child];
        index_of.insert(j.child, links.len());
        links.push(Link {
            name: j.child.to_string(),
            joint_name: j.block.name.clone(),
            parent,
            kind: j.kind,
            group: j.group,
            tree: j.tree,
            mass: d.mass,
            com: d.com,
            inertia_com: d.inertia,
            inertia: spatial_inertia(d.mass, &d.com, &d.inertia),
            home: j.home,
        });
    }

    let mut limits = vec![JointLimits::default(); links.len() - 1];
    for b in limit_blocks {
        let Some(li) = links.iter().position(|l| l.joint_name == b.name) else {
            return Err(invalid(&b.name, "limits for an unknown joint"));
        };
        if li == 0 {
            return Err(invalid(&b.name, "the floating joint has no limits"));
        }
        let lim = &mut limits[li - 1];
        if let Some([lo, hi]) = b.numbers::<2>("position")? {
            if !(lo < hi) {
                return Err(invalid(&b.name, "position limits need q_min < q_max"));
            }
            lim.q_min = lo;
            lim.q_max = hi;
        }
        if let Some([lo, hi]) = b.numbers::<2>("torque")? {
            if !(lo < hi) {
                return Err(invalid(&b.name, "torque limits need tau_min < tau_max"));
            }
            lim.tau_min = lo;
            lim.tau_max = hi;
        }
    }

    let mut frames = Vec::new();
    for b in frame_blocks {
        if frames.iter().any(|f: &Frame| f.name == b.name) {
            return Err(invalid(&b.name, "duplicate frame"));
        }
        let link_name = b.require_word("link")?;
        let link = *index_of
            .get(link_name)
            .ok_or_else(|| invalid(&b.name, format!("frame on unknown link `{link_name}`")))?;
        let offset = Vec3::from(b.numbers::<3>("offset")?.unwrap_or([0.0; 3]));
        frames.push(Frame {
            name: b.name.clone(),
            link,
            offset,
        });
    }
    if !frames.iter().any(|f| f.name == "B") {
        frames.insert(
            0,
            Frame {
                name: "B".into(),
                link: 0,
                offset: Vec3::zeros(),
            },
        );
    }

    Ok(RobotModel {
        links,
        frames,
        limits,
        n_leg,
        n_arm,
    })
}
