use serde::{Deserialize, Serialize};

use super::LearnError;

/// Decayed accumulators of squared gradients and squared updates, one pair
/// per parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdadeltaState {
    pub rho: f64,
    pub epsilon: f64,
    pub sq_grad: Vec<Vec<f64>>,
    pub sq_update: Vec<Vec<f64>>,
}

impl AdadeltaState {
    pub const DEFAULT_RHO: f64 = 0.95;
    pub const DEFAULT_EPSILON: f64 = 1e-6;

    /// Zeroed state for parameter tensors of the given lengths.
    pub fn new(shapes: &[usize], rho: f64, epsilon: f64) -> Self {
        AdadeltaState {
            rho,
            epsilon,
            sq_grad: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            sq_update: shapes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn with_defaults(shapes: &[usize]) -> Self {
        Self::new(shapes, Self::DEFAULT_RHO, Self::DEFAULT_EPSILON)
    }
}

/// One ADADELTA update, per parameter:
///
/// ```text
/// E[g²]  ← ρ E[g²] + (1 − ρ) g²
/// Δx     ← −(√(E[Δx²] + ε) / √(E[g²] + ε)) g
/// E[Δx²] ← ρ E[Δx²] + (1 − ρ) Δx²
/// x      ← x + Δx
/// ```
///
/// Nothing is modified when any gradient is non-finite.
pub fn adadelta_step(state: &mut AdadeltaState, params: &mut [&mut [f64]], grads: &[&[f64]]) -> Result<(), LearnError> {
    if params.len() != grads.len() || params.len() != state.sq_grad.len() {
        return Err(LearnError::ShapeMismatch(format!(
            "{} parameter tensors, {} gradients, {} accumulators",
            params.len(),
            grads.len(),
            state.sq_grad.len()
        )));
    }
    for (i, (p, g)) in params.iter().zip(grads).enumerate() {
        if p.len() != g.len() || p.len() != state.sq_grad[i].len() {
            return Err(LearnError::ShapeMismatch(format!("tensor {i}: lengths differ")));
        }
    }
    if grads.iter().any(|g| g.iter().any(|v| !v.is_finite())) {
        return Err(LearnError::NonFiniteGradient);
    }
    let (rho, eps) = (state.rho, state.epsilon);
    for (t, (p, g)) in params.iter_mut().zip(grads).enumerate() {
        let eg2 = &mut state.sq_grad[t];
        let edx2 = &mut state.sq_update[t];
        for j in 0..p.len() {
            let gj = g[j];
            eg2[j] = rho * eg2[j] + (1.0 - rho) * gj * gj;
            let dx = -((edx2[j] + eps).sqrt() / (eg2[j] + eps).sqrt()) * gj;
            edx2[j] = rho * edx2[j] + (1.0 - rho) * dx * dx;
            p[j] += dx;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_is_identity() {
        let mut state = AdadeltaState::with_defaults(&[3]);
        let mut p = vec![1.0, -2.0, 3.5];
        let before = p.clone();
        adadelta_step(&mut state, &mut [&mut p], &[&[0.0, 0.0, 0.0]]).unwrap();
        assert_eq!(p, before);
        assert_eq!(state, AdadeltaState::with_defaults(&[3]));
    }

    #[test]
    fn first_unit_step() {
        let mut state = AdadeltaState::with_defaults(&[1]);
        let mut p = vec![0.0];
        adadelta_step(&mut state, &mut [&mut p], &[&[1.0]]).unwrap();
        let expected = -(1e-6f64).sqrt() / (0.05f64 + 1e-6).sqrt();
        assert!((p[0] - expected).abs() < 1e-15);
        assert!((p[0] + 0.004472).abs() < 1e-6);
    }

    #[test]
    fn non_finite_gradient_leaves_state_alone() {
        let mut state = AdadeltaState::with_defaults(&[2]);
        let mut p = vec![1.0, 1.0];
        assert!(matches!(
            adadelta_step(&mut state, &mut [&mut p], &[&[0.5, f64::NAN]]),
            Err(LearnError::NonFiniteGradient)
        ));
        assert_eq!(p, vec![1.0, 1.0]);
        assert_eq!(state.sq_grad[0], vec![0.0, 0.0]);
    }

    #[test]
    fn shape_mismatch() {
        let mut state = AdadeltaState::with_defaults(&[2]);
        let mut p = vec![1.0, 1.0];
        assert!(adadelta_step(&mut state, &mut [&mut p], &[&[0.5]]).is_err());
    }
}
