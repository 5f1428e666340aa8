use crate::kernels::SimplexWeights;

/// Euclidean projection onto the probability simplex.
///
/// Sort-based threshold rule: with `u` sorted descending, `ρ` is the largest
/// index with `u_ρ − (Σ_{j≤ρ} u_j − 1)/ρ > 0`, and the projection is
/// `max(v − τ, 0)` with `τ = (Σ_{j≤ρ} u_j − 1)/ρ`.
///
/// # Panics
///
/// On an empty or non-finite input.
pub fn project_simplex(v: &[f64]) -> SimplexWeights {
    assert!(!v.is_empty(), "cannot project an empty vector");
    assert!(
        v.iter().all(|x| x.is_finite()),
        "projection input must be finite"
    );
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumsum += uj;
        let candidate = (cumsum - 1.0) / (j + 1) as f64;
        if uj - candidate > 0.0 {
            tau = candidate;
        }
    }
    SimplexWeights::from_normalized(v.iter().map(|&x| (x - tau).max(0.0)).collect())
}
