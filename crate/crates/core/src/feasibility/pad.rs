//! Hypothetical alternatives appended to the final set.
//!
//! When `M' < M - 1` the final set cannot carry free propensities. Appending
//! alternatives that are never observed fixes the count. The padded
//! transition is row-orthonormal: its observable block is the nearest partial
//! isometry to the original transition (the unitary factor of its polar
//! decomposition), and the hypothetical columns span the remaining
//! orthogonal complement.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{born_admissible, ShapeSpec};
use crate::context::{default_label, AlternativeSet, AmplitudeAssignment, ContextNetwork};
use crate::error::{Error, Result};

/// Relative singular-value cutoff for the rank of the original transition.
const RANK_CUTOFF: f64 = 1e-12;

/// The shape after padding to `target` alternatives, or why it fails.
pub fn pad_shape(shape: ShapeSpec, target: usize) -> Result<ShapeSpec> {
    if target < shape.m_prime {
        return Err(Error::PaddingTargetTooSmall {
            target,
            current: shape.m_prime,
        });
    }
    let padded = ShapeSpec::new(shape.m, target)?;
    if !born_admissible(padded) {
        return Err(Error::PaddingInsufficient {
            m: shape.m,
            target,
        });
    }
    Ok(padded)
}

/// Label of hypothetical alternative `j` in layer `layer`, e.g. `~A3'`.
fn hypothetical_label(layer: usize, j: usize) -> String {
    format!("~{}", default_label(layer, j))
}

/// Pads the final set of `ctx` to `target` alternatives.
pub fn pad_hypothetical(ctx: &ContextNetwork, target: usize) -> Result<ContextNetwork> {
    if !ctx.rule().is_born() {
        return Err(Error::UnsupportedRule(format!(
            "padding builds row-orthonormal transitions, which normalize only under |x|^2, not {}",
            ctx.rule()
        )));
    }
    let k = ctx.num_layers() - 1;
    let last = &ctx.layers()[k];
    if k == 0 {
        return Err(Error::UnsupportedShape {
            m: last.size(),
            m_prime: last.size(),
            reason: "a single-set context has no transition to pad".into(),
        });
    }
    let a = ctx.transition_into(k);
    let (m, n) = (a.nrows(), a.ncols());
    pad_shape(ShapeSpec::new(m, n)?, target)?;
    if target == n {
        return Ok(ctx.clone());
    }

    let svd = a.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    let sv = &svd.singular_values;
    let max = sv.iter().copied().fold(0.0, f64::max);
    let rank = sv.iter().filter(|&&s| s > RANK_CUTOFF * max.max(1.0)).count();
    let needed = n + (m - rank);
    if target < needed {
        return Err(Error::NoIsometricCompletion {
            m,
            current: n,
            target,
            needed,
        });
    }

    // Observable block: sum over the retained singular pairs of u_i v_i^H.
    let ur = u.columns(0, rank).into_owned();
    let vr_h = v_t.rows(0, rank).into_owned();
    let observable = &ur * &vr_h;

    // Orthonormal basis of the complement of range(U_r) in C^m.
    let mut basis: Vec<DVector<Complex64>> = (0..rank).map(|i| ur.column(i).into_owned()).collect();
    let mut complement: Vec<DVector<Complex64>> = Vec::new();
    for e in 0..m {
        if basis.len() == m {
            break;
        }
        let mut v = DVector::from_fn(m, |i, _| {
            if i == e {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        for _ in 0..2 {
            for b in &basis {
                let proj = b.dotc(&v);
                v -= b * proj;
            }
        }
        let norm = v.norm();
        if norm > 1e-8 {
            v /= Complex64::new(norm, 0.0);
            basis.push(v.clone());
            complement.push(v);
        }
    }

    let padded = DMatrix::from_fn(m, target, |i, j| {
        if j < n {
            observable[(i, j)]
        } else if j - n < complement.len() {
            complement[j - n][i]
        } else {
            Complex64::new(0.0, 0.0)
        }
    });

    let mut layers: Vec<AlternativeSet> = ctx.layers().to_vec();
    let set = &mut layers[k];
    let original = set.padded_from.unwrap_or(n);
    set.labels
        .extend((n..target).map(|j| hypothetical_label(k, j)));
    set.padded_from = Some(original);

    let mut transitions = ctx.amplitudes().transitions.clone();
    transitions[k - 1] = padded;
    ContextNetwork::from_sets(
        ctx.name(),
        layers,
        AmplitudeAssignment::new(ctx.first_layer().to_vec(), transitions),
        ctx.rule(),
    )
}
