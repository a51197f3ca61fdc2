//! Contexts and states as vectors in finite-dimensional inner-product spaces.
//!
//! A layer of `M` alternatives spans `C^M` with basis `|1>, ..., |M>`. Two
//! simultaneously knowable layers span the tensor product, ordered by the
//! first layer's index and then the second's.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::context::{ContextNetwork, NORMALIZATION_TOLERANCE};
use crate::engine::propagate_amplitudes;
use crate::error::{Error, Result};
use crate::state::{Bracket, EpistemicState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    pub basis: Vec<String>,
    pub coords: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub state: StateVector,
    /// `|<j|s>|^2` for the projected state `s`.
    pub weight: f64,
}

impl StateVector {
    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// `<self|other>`, antilinear in `self`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.coords.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// The basis vector `|j>` over `basis`.
    pub fn basis_vector(basis: Vec<String>, j: usize) -> Result<Self> {
        if j >= basis.len() {
            return Err(Error::IndexOutOfRange {
                index: j,
                dim: basis.len(),
            });
        }
        let mut coords = vec![Complex64::new(0.0, 0.0); basis.len()];
        coords[j] = Complex64::new(1.0, 0.0);
        Ok(StateVector { basis, coords })
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("state vectors serialize")
    }
}

fn checked(location: String, v: StateVector) -> Result<StateVector> {
    let sum = v.norm().powi(2);
    if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::NormalizationViolation {
            location,
            sum,
            tolerance: NORMALIZATION_TOLERANCE,
        });
    }
    Ok(v)
}

/// The superposition `sum_j a_j |j>` over layer `k`, where `a_j` sums every
/// path amplitude into alternative `j`. For `k = 0` these are the `c_j`.
pub fn to_state_vector(ctx: &ContextNetwork, k: usize) -> Result<StateVector> {
    let layer = ctx.layer(k)?;
    checked(
        format!("state vector of layer {k}"),
        StateVector {
            basis: layer.labels.clone(),
            coords: propagate_amplitudes(ctx, k),
        },
    )
}

/// Projects onto `|j>` and renormalizes: the observation of alternative `j`.
/// The global phase of the result is dropped, so the image is exactly `|j>`.
pub fn project(state: &StateVector, j: usize) -> Result<Projection> {
    let c = *state.coords.get(j).ok_or(Error::IndexOutOfRange {
        index: j,
        dim: state.dim(),
    })?;
    let weight = c.norm_sqr();
    if weight == 0.0 {
        return Err(Error::ZeroAmplitudeProjection { index: j });
    }
    Ok(Projection {
        state: StateVector::basis_vector(state.basis.clone(), j)?,
        weight,
    })
}

/// Translates bracket `k` of `state`. A resolved bracket becomes its basis
/// vector and an unresolved one the superposition of its entries. Collapsed
/// brackets have no translation.
pub fn bracket_vector(ctx: &ContextNetwork, state: &EpistemicState, k: usize) -> Result<StateVector> {
    let layer = ctx.layer(k)?;
    let basis = layer.labels.clone();
    match state.bracket(k) {
        Some(Bracket::Resolved(alt)) => StateVector::basis_vector(basis, alt.index),
        Some(Bracket::Unresolved(entries)) => {
            let mut coords = vec![Complex64::new(0.0, 0.0); basis.len()];
            for e in entries {
                coords[e.alt.index] = e.amplitude(ctx);
            }
            checked(format!("bracket {k}"), StateVector { basis, coords })
        }
        Some(Bracket::Collapsed(_)) => Err(Error::UntranslatableBracket { layer: k }),
        None => Err(Error::LayerOutOfRange {
            layer: k,
            layers: state.brackets().len(),
        }),
    }
}

/// Basis of `H_A (x) H_A'` for a two-layer context.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TensorBasis {
    pub factors: (usize, usize),
    pub labels: Vec<String>,
}

impl TensorBasis {
    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn index(&self, j: usize, jp: usize) -> usize {
        j * self.factors.1 + jp
    }

    pub fn basis_vectors(&self) -> Vec<StateVector> {
        (0..self.dim())
            .map(|i| StateVector::basis_vector(self.labels.clone(), i).expect("index below dim"))
            .collect()
    }

    /// `|j> (x) |j'>`, the image of a state with both layers resolved.
    pub fn resolved(&self, state: &EpistemicState) -> Result<StateVector> {
        let j = state.resolved_outcome(0);
        let jp = state.resolved_outcome(1);
        match (j, jp) {
            (Some(j), Some(jp)) => StateVector::basis_vector(self.labels.clone(), self.index(j, jp)),
            (None, _) => Err(Error::UntranslatableBracket { layer: 0 }),
            (_, None) => Err(Error::UntranslatableBracket { layer: 1 }),
        }
    }

    pub fn product(&self, a: &StateVector, b: &StateVector) -> StateVector {
        let coords = a
            .coords
            .iter()
            .flat_map(|x| b.coords.iter().map(move |y| x * y))
            .collect();
        StateVector {
            basis: self.labels.clone(),
            coords,
        }
    }
}

/// The product space of a two-layer context. The caller asserts that both
/// attributes can be known at once; without that the construction is refused.
pub fn tensor_context(ctx: &ContextNetwork, simultaneously_knowable: bool) -> Result<TensorBasis> {
    if ctx.num_layers() != 2 {
        return Err(Error::UnsupportedLayerCount(ctx.num_layers()));
    }
    if !simultaneously_knowable {
        return Err(Error::NotSimultaneouslyKnowable);
    }
    let (a, b) = (&ctx.layers()[0], &ctx.layers()[1]);
    let labels = a
        .labels
        .iter()
        .flat_map(|x| b.labels.iter().map(move |y| format!("{x}⊗{y}")))
        .collect();
    Ok(TensorBasis {
        factors: (a.size(), b.size()),
        labels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::context::{build_context, AmplitudeAssignment, Knowability};
    use crate::engine::eval_interference;
    use crate::rule::ProbabilityRule;
    use crate::state::{initial_state, ContextEvent, EventKind};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn single(first: Vec<Complex64>) -> ContextNetwork {
        let n = first.len();
        build_context(
            "s",
            &[(n, Knowability::L3)],
            AmplitudeAssignment::new(first, vec![]),
            ProbabilityRule::BORN,
        )
        .unwrap()
    }

    fn mz() -> ContextNetwork {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        build_context(
            "mz",
            &[(2, Knowability::L3), (2, Knowability::L3)],
            AmplitudeAssignment::new(
                vec![c(h, 0.0), c(h, 0.0)],
                vec![AmplitudeAssignment::matrix(&[
                    &[c(h, 0.0), c(0.0, h)],
                    &[c(h, 0.0), c(0.0, -h)],
                ])],
            ),
            ProbabilityRule::BORN,
        )
        .unwrap()
    }

    #[test]
    fn superposition_has_unit_length() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let v = to_state_vector(&single(vec![c(h, 0.0), c(h, 0.0)]), 0).unwrap();
        assert!((v.norm() - 1.0).abs() < 1e-15);
        let v = to_state_vector(&single(vec![c(0.6, 0.0), c(0.0, 0.8)]), 0).unwrap();
        let e2 = StateVector::basis_vector(v.basis.clone(), 1).unwrap();
        assert!((e2.inner(&v) - c(0.0, 0.8)).norm() < 1e-15);
    }

    #[test]
    fn projections() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let v = to_state_vector(&single(vec![c(h, 0.0), c(h, 0.0)]), 0).unwrap();
        let p = project(&v, 0).unwrap();
        assert!((p.weight - 0.5).abs() < 1e-15);
        assert_eq!(p.state.coords[0], c(1.0, 0.0));
        let again = project(&p.state, 0).unwrap();
        assert_eq!(again.state, p.state);
        assert_eq!(again.weight, 1.0);

        let v = to_state_vector(&single(vec![c(1.0, 0.0), c(0.0, 0.0)]), 0).unwrap();
        assert_eq!(project(&v, 0).unwrap().weight, 1.0);
        assert!(matches!(project(&v, 1), Err(Error::ZeroAmplitudeProjection { index: 1 })));
        assert!(matches!(project(&v, 2), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn downstream_vector_matches_interference() {
        let ctx = mz();
        let v = to_state_vector(&ctx, 1).unwrap();
        let d = eval_interference(&ctx, 1).unwrap();
        for j in 0..2 {
            assert!((project(&v, j).map(|p| p.weight).unwrap_or(0.0) - d.probs[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn tensor_shapes() {
        let t = tensor_context(&mz(), true).unwrap();
        assert_eq!(t.dim(), 4);
        assert_eq!(t.labels[1], "A1⊗A2'");
        assert!(matches!(tensor_context(&mz(), false), Err(Error::NotSimultaneouslyKnowable)));
        assert!(matches!(
            tensor_context(&single(vec![c(1.0, 0.0)]), true),
            Err(Error::UnsupportedLayerCount(1))
        ));
    }

    #[test]
    fn brackets_translate() {
        let ctx = mz();
        let s0 = initial_state(&ctx);
        let v = bracket_vector(&ctx, &s0, 0).unwrap();
        assert_eq!(v.coords, ctx.first_layer().to_vec());
        let s1 = s0
            .apply_event(&ctx, &ContextEvent::new(1, EventKind::Observe { layer: 0, outcome: 1 }))
            .unwrap();
        let s2 = s1
            .apply_event(&ctx, &ContextEvent::new(2, EventKind::Observe { layer: 1, outcome: 0 }))
            .unwrap();
        let t = tensor_context(&ctx, true).unwrap();
        let r = t.resolved(&s2).unwrap();
        assert_eq!(r.coords[t.index(1, 0)], c(1.0, 0.0));
        assert!(matches!(t.resolved(&s1), Err(Error::UntranslatableBracket { layer: 1 })));
        let a = bracket_vector(&ctx, &s2, 0).unwrap();
        let b = bracket_vector(&ctx, &s2, 1).unwrap();
        assert_eq!(t.product(&a, &b), r);
    }

    #[test]
    fn json_shape() {
        let v = to_state_vector(&single(vec![c(0.6, 0.0), c(0.0, 0.8)]), 0).unwrap();
        let j = v.to_json();
        assert_eq!(j["basis"][1], "A2");
        assert_eq!(j["coords"][1][1], 0.8);
    }
}
