//! Problem zoo and a name-keyed registry used by the harness.

pub mod bilevel;
pub mod gave;
pub mod gnep;
pub mod minmax;
pub mod toys;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::operator::OperatorSpec;
use crate::problem::{HierarchicalProblem, LowerSet};
use crate::prox::ProxTerm;

pub use bilevel::build_simple_bilevel;
pub use gave::{build_gave, GaveSpec};
pub use gnep::{build_gnep, build_gnep_with, GnepReading};
pub use minmax::{build_minmax, MinMaxSpec};

/// Problem selection as it appears in a config file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemParams {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reading: Option<GnepReading>,
}

impl ProblemParams {
    pub fn named(name: &str) -> Self {
        Self {
            name: name.to_string(),
            ..Self::default()
        }
    }

    fn reject_n(&self) -> Result<()> {
        match self.n {
            Some(_) => Err(Error::config(format!("problem '{}' does not take n", self.name))),
            None => Ok(()),
        }
    }

    fn reject_reading(&self) -> Result<()> {
        match self.reading {
            Some(_) => Err(Error::config(format!("problem '{}' does not take reading", self.name))),
            None => Ok(()),
        }
    }
}

type ToyBuilder = fn() -> HierarchicalProblem;
type Builder = Arc<dyn Fn(&ProblemParams) -> Result<HierarchicalProblem> + Send + Sync>;

/// Maps problem names to builders. Custom problems are added with
/// [`register`](Registry::register).
#[derive(Clone)]
pub struct Registry {
    builders: BTreeMap<String, Builder>,
}

impl fmt::Debug for Registry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.builders.keys()).finish()
    }
}

impl Default for Registry {
    fn default() -> Self {
        Self::with_builtins()
    }
}

impl Registry {
    pub fn empty() -> Self {
        Self {
            builders: BTreeMap::new(),
        }
    }

    pub fn with_builtins() -> Self {
        let mut r = Self::empty();
        r.register("gnep", |p| {
            p.reject_n()?;
            build_gnep_with(p.reading.unwrap_or_default())
        });
        r.register("gave", |p| {
            p.reject_reading()?;
            build_gave(p.n.unwrap_or(9))
        });
        r.register("minmax", |p| {
            p.reject_reading()?;
            default_minmax(p.n.unwrap_or(2))
        });
        r.register("bilevel", |p| {
            p.reject_reading()?;
            default_bilevel(p.n.unwrap_or(2))
        });
        let toys: [(&str, ToyBuilder); 4] = [
            ("strong_toy", toys::strong_toy),
            ("cross_toy", toys::cross_toy),
            ("abs_toy", toys::abs_toy),
            ("quad_toy", toys::quad_toy),
        ];
        for (name, f) in toys {
            r.register(name, move |p| {
                p.reject_n()?;
                p.reject_reading()?;
                Ok(f())
            });
        }
        r
    }

    pub fn register<F>(&mut self, name: &str, builder: F)
    where
        F: Fn(&ProblemParams) -> Result<HierarchicalProblem> + Send + Sync + 'static,
    {
        self.builders.insert(name.to_string(), Arc::new(builder));
    }

    pub fn contains(&self, name: &str) -> bool {
        self.builders.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.builders.keys().map(String::as_str)
    }

    pub fn build(&self, params: &ProblemParams) -> Result<HierarchicalProblem> {
        let builder = self.builders.get(&params.name).ok_or_else(|| {
            let known: Vec<&str> = self.names().collect();
            Error::config(format!(
                "unknown problem '{}' (known: {})",
                params.name,
                known.join(", ")
            ))
        })?;
        builder(params)
    }
}

/// `min_x max_y ½‖x‖² + ⟨x, y⟩ − ½‖y‖²` subject to `x = y`; solution `0`.
pub fn default_minmax(n: usize) -> Result<HierarchicalProblem> {
    if n == 0 {
        return Err(Error::config("minmax needs n ≥ 1"));
    }
    let spec = MinMaxSpec {
        coupling: Matrix::identity(n, n),
        grad_f1: OperatorSpec::identity(n),
        grad_f2: OperatorSpec::identity(n),
        phi: ProxTerm::Zero,
        psi: ProxTerm::Zero,
        a: Matrix::identity(n, n),
        b: -Matrix::identity(n, n),
        c: Vector::zeros(n),
    };
    build_minmax("minmax", spec)?.with_solution(Vector::zeros(2 * n))
}

/// `min ½‖x‖²` over `argmin ½‖x − c‖²` with `c = (1, 2, …, n)`.
pub fn default_bilevel(n: usize) -> Result<HierarchicalProblem> {
    if n == 0 {
        return Err(Error::config("bilevel needs n ≥ 1"));
    }
    let c = Vector::from_fn(n, |i, _| (i + 1) as f64);
    let p = build_simple_bilevel(
        OperatorSpec::identity(n),
        ProxTerm::Zero,
        OperatorSpec::affine_with_constants("x-c", Matrix::identity(n, n), -&c, 1.0, 1.0),
        ProxTerm::Zero,
    )?;
    Ok(p.with_solution(c.clone())?.with_lower_set(LowerSet::Point(c)))
}

/// Largest `‖∇f(x) − FD(x)‖_∞` over `points`, with central differences of
/// step `h`.
pub fn max_gradient_error(f: impl Fn(&Vector) -> f64, grad: &OperatorSpec, points: &[Vector], h: f64) -> f64 {
    points
        .iter()
        .map(|x| {
            let fd = Vector::from_fn(x.len(), |i, _| {
                let mut p = x.clone();
                let mut m = x.clone();
                p[i] += h;
                m[i] -= h;
                (f(&p) - f(&m)) / (2.0 * h)
            });
            (grad.apply(x) - fd).amax()
        })
        .fold(0.0, f64::max)
}
