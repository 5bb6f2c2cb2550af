use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{AxisBox, EuclideanBall, Heatball, ModifiedHeatball, Region};
use crate::counterexamples::CombSet;
use crate::error::Result;

/// Serializable description of a region, e.g. `{"kind":"ball","center":[0,0],"radius":1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegionDescriptor {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    Heatball { x: Vec<f64>, t: f64, r: f64 },
    ModifiedHeatball { x: Vec<f64>, t: f64, r: f64, m: usize },
    Comb { delta: f64 },
}

impl RegionDescriptor {
    pub fn unit_square() -> Self {
        RegionDescriptor::Box { lo: vec![0.0, 0.0], hi: vec![1.0, 1.0] }
    }

    pub fn build(&self) -> Result<Arc<dyn Region>> {
        Ok(match self {
            RegionDescriptor::Box { lo, hi } => Arc::new(AxisBox::new(lo.clone(), hi.clone())?),
            RegionDescriptor::Ball { center, radius } => Arc::new(EuclideanBall::new(center.clone(), *radius)?),
            RegionDescriptor::Heatball { x, t, r } => Arc::new(Heatball::new(x.clone(), *t, *r)?),
            RegionDescriptor::ModifiedHeatball { x, t, r, m } => Arc::new(ModifiedHeatball::new(x.clone(), *t, *r, *m)?),
            RegionDescriptor::Comb { delta } => Arc::new(CombSet::new(*delta)?),
        })
    }
}
