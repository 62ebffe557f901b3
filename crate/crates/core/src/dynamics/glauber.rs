/// Heat-bath acceptance probability `x/(1 + x)`, `x = exp(-ΔE/kT)`.
///
/// Saturates to exactly 0 or 1 once `|ΔE/kT| > 700`.
pub fn glauber_probability(delta_e: f64, kt: f64) -> f64 {
    let z = delta_e / kt;
    if z > 700.0 {
        0.0
    } else if z < -700.0 {
        1.0
    } else {
        1.0 / (1.0 + z.exp())
    }
}

/// Whether a move with energy change `delta_e` is accepted, given a uniform
/// draw `u` in `[0, 1)`.
pub fn glauber_accept(delta_e: f64, kt: f64, u: f64) -> bool {
    u < glauber_probability(delta_e, kt)
}
