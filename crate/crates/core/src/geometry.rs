//! Cell layout, distributed-antenna port placement, pathloss, and user drops.
//!
//! The cell is a disk of radius `cell_radius` centered at the origin. The
//! canonical layout places the `N` DA ports on a ring of radius
//! `sqrt(3/7) * cell_radius`, port 1 on the positive x-axis, counter-clockwise.
//! Large-scale gains are pure pathloss `d^-p`; coordinates are dimensionless
//! cell units.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Ratio of the port ring radius to the cell radius.
pub fn ring_radius(cell_radius: f64) -> f64 {
    (3.0f64 / 7.0).sqrt() * cell_radius
}

/// Cell radius used throughout the reference experiments, `sqrt(112/3)`.
///
/// This choice puts the port ring at radius exactly 4 and gives a cell-edge
/// pathloss of 23.6 dB at exponent 3.
pub fn default_cell_radius() -> f64 {
    (112.0f64 / 3.0).sqrt()
}

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("at least one DA port is required")]
    ZeroPorts,
    #[error("cell radius must be positive and finite, got {0}")]
    InvalidRadius(f64),
    #[error("pathloss exponent must be positive and finite, got {0}")]
    InvalidExponent(f64),
    #[error("distance must be positive and finite, got {0}")]
    InvalidDistance(f64),
    #[error("position must have finite coordinates")]
    NonFinitePosition,
    #[error("user {user} coincides with port {port}")]
    CoincidentUserPort { user: usize, port: usize },
    #[error("distance entry at ({user},{port}) is not a positive finite number")]
    InvalidDistanceEntry { user: usize, port: usize },
    #[error("row {row} has {found} entries, expected {expected}")]
    RaggedMatrix {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("pathloss gain at ({user},{port}) is not a positive finite number")]
    DegenerateGain { user: usize, port: usize },
    #[error("{name} must be positive and finite, got {value}")]
    InvalidBudget { name: &'static str, value: f64 },
}

/// A point in the cell plane, in cell units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance_to(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Place `n_ports` DA ports on the canonical ring of a cell of radius
/// `cell_radius`: port `j` (1-based) at angle `2*pi*(j-1)/n` and radius
/// `sqrt(3/7) * cell_radius`.
pub fn place_ports(n_ports: usize, cell_radius: f64) -> Result<Vec<Position>, GeometryError> {
    if n_ports == 0 {
        return Err(GeometryError::ZeroPorts);
    }
    if !(cell_radius > 0.0) || !cell_radius.is_finite() {
        return Err(GeometryError::InvalidRadius(cell_radius));
    }
    let r = ring_radius(cell_radius);
    Ok((0..n_ports)
        .map(|j| {
            let angle = std::f64::consts::TAU * j as f64 / n_ports as f64;
            Position::new(r * angle.cos(), r * angle.sin())
        })
        .collect())
}

/// Propagation pathloss `distance^-exponent`.
pub fn pathloss(distance: f64, exponent: f64) -> Result<f64, GeometryError> {
    if !(distance > 0.0) || !distance.is_finite() {
        return Err(GeometryError::InvalidDistance(distance));
    }
    Ok(distance.powf(-exponent))
}

/// Cell geometry: radius, DA port positions, and the pathloss exponent.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellLayout {
    cell_radius: f64,
    ports: Vec<Position>,
    pathloss_exponent: f64,
}

impl CellLayout {
    /// Canonical layout: ports on the `sqrt(3/7)` ring.
    pub fn circular(
        n_ports: usize,
        cell_radius: f64,
        pathloss_exponent: f64,
    ) -> Result<Self, GeometryError> {
        let ports = place_ports(n_ports, cell_radius)?;
        Self::with_ports(ports, cell_radius, pathloss_exponent)
    }

    /// Layout with explicitly given port positions (fixed-geometry scenarios).
    pub fn with_ports(
        ports: Vec<Position>,
        cell_radius: f64,
        pathloss_exponent: f64,
    ) -> Result<Self, GeometryError> {
        if ports.is_empty() {
            return Err(GeometryError::ZeroPorts);
        }
        if !(cell_radius > 0.0) || !cell_radius.is_finite() {
            return Err(GeometryError::InvalidRadius(cell_radius));
        }
        if !(pathloss_exponent > 0.0) || !pathloss_exponent.is_finite() {
            return Err(GeometryError::InvalidExponent(pathloss_exponent));
        }
        if ports.iter().any(|p| !p.is_finite()) {
            return Err(GeometryError::NonFinitePosition);
        }
        Ok(Self {
            cell_radius,
            ports,
            pathloss_exponent,
        })
    }

    pub fn n_ports(&self) -> usize {
        self.ports.len()
    }

    pub fn ports(&self) -> &[Position] {
        &self.ports
    }

    pub fn cell_radius(&self) -> f64 {
        self.cell_radius
    }

    pub fn pathloss_exponent(&self) -> f64 {
        self.pathloss_exponent
    }
}

/// K x N matrix of user-to-port distances, row-major by user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceMatrix {
    k_users: usize,
    n_ports: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    /// Pairwise distances between every user and every port. A user sitting
    /// exactly on a port makes the gain singular and is rejected.
    pub fn between(users: &[Position], ports: &[Position]) -> Result<Self, GeometryError> {
        if ports.is_empty() {
            return Err(GeometryError::ZeroPorts);
        }
        let mut data = Vec::with_capacity(users.len() * ports.len());
        for (i, u) in users.iter().enumerate() {
            if !u.is_finite() {
                return Err(GeometryError::NonFinitePosition);
            }
            for (j, p) in ports.iter().enumerate() {
                let d = u.distance_to(p);
                if d == 0.0 {
                    return Err(GeometryError::CoincidentUserPort { user: i, port: j });
                }
                data.push(d);
            }
        }
        Ok(Self {
            k_users: users.len(),
            n_ports: ports.len(),
            data,
        })
    }

    /// Build from raw rows; every entry must be positive and finite.
    pub fn from_rows(rows: &[Vec<f64>], n_ports: usize) -> Result<Self, GeometryError> {
        if n_ports == 0 {
            return Err(GeometryError::ZeroPorts);
        }
        let mut data = Vec::with_capacity(rows.len() * n_ports);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_ports {
                return Err(GeometryError::RaggedMatrix {
                    row: i,
                    expected: n_ports,
                    found: row.len(),
                });
            }
            for (j, &d) in row.iter().enumerate() {
                if !(d > 0.0) || !d.is_finite() {
                    return Err(GeometryError::InvalidDistanceEntry { user: i, port: j });
                }
                data.push(d);
            }
        }
        Ok(Self {
            k_users: rows.len(),
            n_ports,
            data,
        })
    }

    pub fn k_users(&self) -> usize {
        self.k_users
    }

    pub fn n_ports(&self) -> usize {
        self.n_ports
    }

    pub fn get(&self, user: usize, port: usize) -> f64 {
        self.data[user * self.n_ports + port]
    }

    pub fn row(&self, user: usize) -> &[f64] {
        &self.data[user * self.n_ports..(user + 1) * self.n_ports]
    }

    /// The user nearest to `port`; ties broken by lowest user index.
    pub fn nearest_user(&self, port: usize) -> usize {
        let mut best = 0;
        for i in 1..self.k_users {
            if self.get(i, port) < self.get(best, port) {
                best = i;
            }
        }
        best
    }

    /// Globally closest (user, port) pair; ties broken by lowest user, then port.
    pub fn global_argmin(&self) -> (usize, usize) {
        let mut best = (0, 0);
        for i in 0..self.k_users {
            for j in 0..self.n_ports {
                if self.get(i, j) < self.get(best.0, best.1) {
                    best = (i, j);
                }
            }
        }
        best
    }
}

/// K x N matrix of large-scale gains `d^-p`, row-major by user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathlossMatrix {
    k_users: usize,
    n_ports: usize,
    gains: Vec<f64>,
}

impl PathlossMatrix {
    pub fn from_distances(
        distances: &DistanceMatrix,
        exponent: f64,
    ) -> Result<Self, GeometryError> {
        if !exponent.is_finite() {
            return Err(GeometryError::InvalidExponent(exponent));
        }
        let mut gains = Vec::with_capacity(distances.data.len());
        for (idx, &d) in distances.data.iter().enumerate() {
            let g = d.powf(-exponent);
            if !(g > 0.0) || !g.is_finite() {
                return Err(GeometryError::DegenerateGain {
                    user: idx / distances.n_ports,
                    port: idx % distances.n_ports,
                });
            }
            gains.push(g);
        }
        Ok(Self {
            k_users: distances.k_users,
            n_ports: distances.n_ports,
            gains,
        })
    }

    pub fn k_users(&self) -> usize {
        self.k_users
    }

    pub fn n_ports(&self) -> usize {
        self.n_ports
    }

    pub fn gain(&self, user: usize, port: usize) -> f64 {
        self.gains[user * self.n_ports + port]
    }

    pub fn row(&self, user: usize) -> &[f64] {
        &self.gains[user * self.n_ports..(user + 1) * self.n_ports]
    }
}

/// Distances and gains between `users` and the layout's ports.
pub fn build_distance_matrix(
    users: &[Position],
    layout: &CellLayout,
) -> Result<DistanceMatrix, GeometryError> {
    DistanceMatrix::between(users, layout.ports())
}

/// Gain matrix `S[i][j] = |user_i - port_j|^-p` for the layout's exponent.
pub fn build_pathloss_matrix(
    users: &[Position],
    layout: &CellLayout,
) -> Result<PathlossMatrix, GeometryError> {
    let d = build_distance_matrix(users, layout)?;
    PathlossMatrix::from_distances(&d, layout.pathloss_exponent())
}

/// Transmit power and noise variance, both linear.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    power: f64,
    noise_variance: f64,
}

impl LinkBudget {
    pub fn new(power: f64, noise_variance: f64) -> Result<Self, GeometryError> {
        if !(power > 0.0) || !power.is_finite() {
            return Err(GeometryError::InvalidBudget {
                name: "power",
                value: power,
            });
        }
        if !(noise_variance > 0.0) || !noise_variance.is_finite() {
            return Err(GeometryError::InvalidBudget {
                name: "noise_variance",
                value: noise_variance,
            });
        }
        Ok(Self {
            power,
            noise_variance,
        })
    }

    /// Budget with unit noise variance; SNR is `P / sigma^2`.
    pub fn from_snr_db(snr_db: f64) -> Self {
        Self {
            power: 10f64.powf(snr_db / 10.0),
            noise_variance: 1.0,
        }
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    pub fn snr_db(&self) -> f64 {
        10.0 * (self.power / self.noise_variance).log10()
    }
}

/// Draw `k` positions i.i.d. uniform over the disk of radius `cell_radius`,
/// via inverse-CDF radius `R*sqrt(U)` so every user consumes exactly two
/// draws from the stream.
pub fn sample_uniform_users<R: Rng + ?Sized>(
    k: usize,
    cell_radius: f64,
    rng: &mut R,
) -> Vec<Position> {
    (0..k)
        .map(|_| {
            let radius = cell_radius * rng.random::<f64>().sqrt();
            let angle = std::f64::consts::TAU * rng.random::<f64>();
            Position::new(radius * angle.cos(), radius * angle.sin())
        })
        .collect()
}

/// Uniform drop that redraws any user closer than `exclusion_radius` to a
/// port. With the default radius 0 this is `sample_uniform_users`.
pub fn sample_users_with_exclusion<R: Rng + ?Sized>(
    k: usize,
    layout: &CellLayout,
    exclusion_radius: f64,
    rng: &mut R,
) -> Vec<Position> {
    if exclusion_radius <= 0.0 {
        return sample_uniform_users(k, layout.cell_radius(), rng);
    }
    (0..k)
        .map(|_| loop {
            let pos = sample_uniform_users(1, layout.cell_radius(), rng)[0];
            if layout
                .ports()
                .iter()
                .all(|p| pos.distance_to(p) >= exclusion_radius)
            {
                return pos;
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ports_two_on_x_axis() {
        let ports = place_ports(2, default_cell_radius()).unwrap();
        assert_abs_diff_eq!(ports[0].x, 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ports[0].y, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ports[1].x, -4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ports[1].y, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn ports_single() {
        let radius = 3.5;
        let ports = place_ports(1, radius).unwrap();
        assert_eq!(ports.len(), 1);
        assert_relative_eq!(ports[0].x, ring_radius(radius), max_relative = 1e-12);
        assert_abs_diff_eq!(ports[0].y, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn ports_four_axes() {
        let ports = place_ports(4, default_cell_radius()).unwrap();
        let expected = [(4.0, 0.0), (0.0, 4.0), (-4.0, 0.0), (0.0, -4.0)];
        for (p, (x, y)) in ports.iter().zip(expected) {
            assert_abs_diff_eq!(p.x, x, epsilon = 1e-12);
            assert_abs_diff_eq!(p.y, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn ports_rejects_degenerate_input() {
        assert_eq!(place_ports(0, 1.0), Err(GeometryError::ZeroPorts));
        assert!(matches!(
            place_ports(2, 0.0),
            Err(GeometryError::InvalidRadius(_))
        ));
        assert!(matches!(
            place_ports(2, -1.0),
            Err(GeometryError::InvalidRadius(_))
        ));
    }

    #[test]
    fn ports_lie_on_ring() {
        for n in [1, 2, 3, 5, 8, 16] {
            let radius = 7.25;
            for p in place_ports(n, radius).unwrap() {
                assert_relative_eq!(p.x.hypot(p.y), ring_radius(radius), max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn pathloss_values() {
        assert_relative_eq!(pathloss(1.0, 3.0).unwrap(), 1.0);
        assert_relative_eq!(pathloss(2.0, 3.0).unwrap(), 0.125);
        assert_relative_eq!(pathloss(10.0, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn pathloss_cell_edge_loss_is_23_5_db() {
        let s = pathloss(default_cell_radius(), 3.0).unwrap();
        let loss_db = -10.0 * s.log10();
        assert!((loss_db - 23.5).abs() < 0.1, "loss {loss_db} dB");
    }

    #[test]
    fn pathloss_rejects_zero_distance() {
        assert!(matches!(
            pathloss(0.0, 3.0),
            Err(GeometryError::InvalidDistance(_))
        ));
    }

    #[test]
    fn pathloss_matrix_offset_check() {
        let layout = CellLayout::with_ports(
            vec![Position::new(4.0, 0.0), Position::new(-4.0, 0.0)],
            default_cell_radius(),
            3.0,
        )
        .unwrap();
        let m = build_pathloss_matrix(&[Position::new(5.0, 0.0)], &layout).unwrap();
        assert_relative_eq!(m.gain(0, 0), 1.0, max_relative = 1e-12);
        assert_relative_eq!(m.gain(0, 1), 9.0f64.powi(-3), max_relative = 1e-12);
    }

    #[test]
    fn pathloss_matrix_two_user_geometry() {
        // Users (-2.5,-2) and (3,4.5) against ports (4,0), (-4,0):
        // d = [[sqrt(46.25), 2.5], [sqrt(21.25), sqrt(69.25)]].
        let layout = CellLayout::with_ports(
            vec![Position::new(4.0, 0.0), Position::new(-4.0, 0.0)],
            default_cell_radius(),
            3.0,
        )
        .unwrap();
        let users = [Position::new(-2.5, -2.0), Position::new(3.0, 4.5)];
        let d = build_distance_matrix(&users, &layout).unwrap();
        assert_relative_eq!(d.get(0, 0), 46.25f64.sqrt(), max_relative = 1e-12);
        assert_relative_eq!(d.get(0, 1), 2.5, max_relative = 1e-12);
        assert_relative_eq!(d.get(1, 0), 21.25f64.sqrt(), max_relative = 1e-12);
        assert_relative_eq!(d.get(1, 1), 69.25f64.sqrt(), max_relative = 1e-12);
        let s = build_pathloss_matrix(&users, &layout).unwrap();
        assert_relative_eq!(s.gain(0, 1), 0.064, max_relative = 1e-12);
        assert_relative_eq!(s.gain(0, 0), 46.25f64.powf(-1.5), max_relative = 1e-12);
    }

    #[test]
    fn pathloss_matrix_empty_users() {
        let layout = CellLayout::circular(3, default_cell_radius(), 3.0).unwrap();
        let m = build_pathloss_matrix(&[], &layout).unwrap();
        assert_eq!(m.k_users(), 0);
        assert_eq!(m.n_ports(), 3);
    }

    #[test]
    fn pathloss_matrix_rejects_coincident() {
        let layout = CellLayout::circular(2, default_cell_radius(), 3.0).unwrap();
        let on_port = layout.ports()[0];
        assert_eq!(
            build_pathloss_matrix(&[on_port], &layout),
            Err(GeometryError::CoincidentUserPort { user: 0, port: 0 })
        );
    }

    #[test]
    fn uniform_drop_mean_radius() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let radius = default_cell_radius();
        let n = 100_000;
        let users = sample_uniform_users(n, radius, &mut rng);
        let mean: f64 = users.iter().map(|p| p.x.hypot(p.y)).sum::<f64>() / n as f64;
        let expected = 2.0 / 3.0 * radius;
        assert!((mean - expected).abs() / expected < 0.01, "mean {mean}");
    }

    #[test]
    fn uniform_drop_support_and_determinism() {
        let radius = 5.0;
        let mut a = ChaCha8Rng::seed_from_u64(99);
        let mut b = ChaCha8Rng::seed_from_u64(99);
        let ua = sample_uniform_users(50, radius, &mut a);
        let ub = sample_uniform_users(50, radius, &mut b);
        assert_eq!(ua, ub);
        assert!(ua.iter().all(|p| p.x.hypot(p.y) <= radius));
    }

    #[test]
    fn uniform_drop_radial_cdf_ks() {
        // Empirical CDF of the radius against F(r) = (r/R)^2.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let radius = default_cell_radius();
        let n = 100_000;
        let mut radii: Vec<f64> = sample_uniform_users(n, radius, &mut rng)
            .iter()
            .map(|p| p.x.hypot(p.y))
            .collect();
        radii.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut ks: f64 = 0.0;
        for (i, r) in radii.iter().enumerate() {
            let f = (r / radius).powi(2);
            let lo = i as f64 / n as f64;
            let hi = (i + 1) as f64 / n as f64;
            ks = ks.max((f - lo).abs()).max((f - hi).abs());
        }
        assert!(ks < 0.01, "KS statistic {ks}");
    }

    #[test]
    fn exclusion_radius_respected() {
        let layout = CellLayout::circular(4, default_cell_radius(), 3.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let users = sample_users_with_exclusion(200, &layout, 0.5, &mut rng);
        for u in &users {
            for p in layout.ports() {
                assert!(u.distance_to(p) >= 0.5);
            }
        }
    }

    #[test]
    fn link_budget_snr_view() {
        let b = LinkBudget::from_snr_db(20.0);
        assert_relative_eq!(b.power(), 100.0, max_relative = 1e-12);
        assert_relative_eq!(b.snr_db(), 20.0, max_relative = 1e-12);
        assert!(LinkBudget::new(0.0, 1.0).is_err());
        assert!(LinkBudget::new(1.0, -2.0).is_err());
    }
}
