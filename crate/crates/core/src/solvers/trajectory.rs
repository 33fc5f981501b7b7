//! Free-flight characteristics of the force-free Liouville operator.

/// A constant-momentum path through `(position, time)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trajectory {
    pub momentum: [f64; 3],
    pub position: [f64; 3],
    pub time: f64,
    pub mass: f64,
}

impl Trajectory {
    /// Position at an earlier time `t_prime`: `x − (P/m)(t − t')`.
    #[inline]
    pub fn position_at(&self, t_prime: f64) -> [f64; 3] {
        free_flight(self.momentum, self.position, self.time, t_prime, self.mass)
    }
}

#[inline]
pub fn free_flight(momentum: [f64; 3], position: [f64; 3], t: f64, t_prime: f64, mass: f64) -> [f64; 3] {
    let dt = t - t_prime;
    [
        position[0] - momentum[0] / mass * dt,
        position[1] - momentum[1] / mass * dt,
        position[2] - momentum[2] / mass * dt,
    ]
}
