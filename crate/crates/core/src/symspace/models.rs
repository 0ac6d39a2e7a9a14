//! Registered desk-scale models: the rank-one hyperbolic planes/spaces and
//! the two split matrix families, each bundling a warped metric and a
//! default lattice. The rank-one character exponents are calibrated so the
//! leaf metric matches da^2 + e^{2a} |dn|^2, the upper half space with
//! z = e^{-a}; each model ships its calibration test.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{RootBlock, WarpedMetric};
use crate::carnot::{CarnotAlgebra, LatticeSpec};
use crate::error::{Error, Result};
use crate::lie::{restricted_roots, MatrixFamily};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelTag {
    H2,
    H3,
    Sl2r,
    Sl3r,
}

pub const ALL_MODELS: [ModelTag; 4] = [ModelTag::H2, ModelTag::H3, ModelTag::Sl2r, ModelTag::Sl3r];

impl fmt::Display for ModelTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ModelTag::H2 => "h2",
            ModelTag::H3 => "h3",
            ModelTag::Sl2r => "sl2r",
            ModelTag::Sl3r => "sl3r",
        };
        f.write_str(s)
    }
}

impl FromStr for ModelTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "h2" => Ok(ModelTag::H2),
            "h3" => Ok(ModelTag::H3),
            "sl2r" => Ok(ModelTag::Sl2r),
            "sl3r" => Ok(ModelTag::Sl3r),
            other => Err(Error::UnsupportedTag(format!(
                "unknown model '{other}'; registered models: h2, h3, sl2r, sl3r"
            ))),
        }
    }
}

/// A registered model: warped metric plus its default integral lattice.
#[derive(Debug, Clone)]
pub struct Model {
    pub tag: ModelTag,
    pub metric: WarpedMetric,
    pub lattice: LatticeSpec,
    /// Root datum backing the matrix families; the analytic hyperbolic
    /// models carry none.
    pub family: Option<MatrixFamily>,
}

impl Model {
    pub fn rank(&self) -> usize {
        self.metric.rank()
    }
}

fn hyperbolic_model(tag: ModelTag, leaf_dim: usize) -> Model {
    let algebra = CarnotAlgebra::abelian(leaf_dim);
    let blocks = vec![RootBlock {
        character: vec![2.0],
        stratum: 1,
        offset: 0,
        dims: leaf_dim,
        form: DMatrix::identity(leaf_dim, leaf_dim),
    }];
    let metric = WarpedMetric::new(1, algebra, blocks).expect("hyperbolic model data is valid");
    Model { tag, metric, lattice: LatticeSpec::integer_abelian(leaf_dim), family: None }
}

fn family_model(tag: ModelTag, family: MatrixFamily) -> Model {
    let datum = restricted_roots(family).expect("registered family");
    let (algebra, layout) =
        CarnotAlgebra::from_root_datum(&datum).expect("nilpotent part is stratified");
    let metric = WarpedMetric::from_layout(datum.rank(), algebra.clone(), &layout)
        .expect("layout covers the algebra");
    let lattice = match family {
        MatrixFamily::Sl2 => LatticeSpec::integer_abelian(1),
        MatrixFamily::Sl3 => LatticeSpec::integer_heisenberg(),
    };
    Model { tag, metric, lattice, family: Some(family) }
}

/// Look up a registered model.
pub fn model(tag: ModelTag) -> Model {
    match tag {
        ModelTag::H2 => hyperbolic_model(ModelTag::H2, 1),
        ModelTag::H3 => hyperbolic_model(ModelTag::H3, 2),
        ModelTag::Sl2r => family_model(ModelTag::Sl2r, MatrixFamily::Sl2),
        ModelTag::Sl3r => family_model(ModelTag::Sl3r, MatrixFamily::Sl3),
    }
}
