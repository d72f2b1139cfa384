use crate::types::Policy;

/// Euclidean projection onto the probability simplex.
///
/// Sort-based thresholding: with `u` sorted decreasingly, the largest `j` for
/// which `u_j - (sum_{i<=j} u_i - 1)/j > 0` fixes the shift `theta`, and the
/// projection is `max(v - theta, 0)`.
pub fn simplex_project(v: &[f64]) -> Policy {
    assert!(!v.is_empty(), "cannot project an empty vector");
    assert!(v.iter().all(|x| x.is_finite()), "projection input must be finite");
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumulative += uj;
        let t = (cumulative - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        }
    }
    let projected: Vec<f64> = v.iter().map(|x| (x - theta).max(0.0)).collect();
    // Rounding leaves the mass within a few ulps of 1; renormalize.
    Policy::normalized(projected).expect("projection has positive mass")
}
