//! Hexagonal cell layout and Poisson user placement.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::config::{MobilityClass, NetworkConfig};
use crate::network::rng_for;
use crate::{NetsimError, Result};

const SQRT3: f64 = 1.732_050_807_568_877_2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x_km: f64,
    pub y_km: f64,
}

impl Position {
    pub fn new(x_km: f64, y_km: f64) -> Self {
        Self { x_km, y_km }
    }

    pub fn distance_km(&self, other: &Position) -> f64 {
        (self.x_km - other.x_km).hypot(self.y_km - other.y_km)
    }
}

/// Area of a regular hexagon with circumradius `r`.
pub fn hexagon_area(radius_km: f64) -> f64 {
    1.5 * SQRT3 * radius_km * radius_km
}

/// Base station sites of a centred honeycomb, rings added outward: 1, 7 or 19 cells.
pub fn hex_centers(n_cells: usize, radius_km: f64) -> Vec<Position> {
    let rings: i32 = match n_cells {
        1 => 0,
        7 => 1,
        _ => 2,
    };
    let mut axial = vec![(0i32, 0i32)];
    for ring in 1..=rings {
        // Walk the ring starting from the "east-south-east" corner.
        let dirs = [(1, 0), (1, -1), (0, -1), (-1, 0), (-1, 1), (0, 1)];
        let (mut q, mut r) = (-ring, ring);
        for (dq, dr) in dirs {
            for _ in 0..ring {
                axial.push((q, r));
                q += dq;
                r += dr;
            }
        }
    }
    axial
        .into_iter()
        .map(|(q, r)| Position::new(SQRT3 * radius_km * (q as f64 + r as f64 / 2.0), 1.5 * radius_km * r as f64))
        .collect()
}

/// Pointy-top hexagon membership test.
pub fn hexagon_contains(center: &Position, radius_km: f64, p: &Position) -> bool {
    let dx = (p.x_km - center.x_km).abs();
    let dy = (p.y_km - center.y_km).abs();
    dx <= SQRT3 / 2.0 * radius_km && dy <= radius_km - dx / SQRT3
}

pub fn sample_in_hexagon<R: Rng + ?Sized>(rng: &mut R, center: &Position, radius_km: f64) -> Position {
    loop {
        let p = Position::new(
            center.x_km + (rng.random::<f64>() * 2.0 - 1.0) * SQRT3 / 2.0 * radius_km,
            center.y_km + (rng.random::<f64>() * 2.0 - 1.0) * radius_km,
        );
        if hexagon_contains(center, radius_km, &p) {
            return p;
        }
    }
}

/// One cell's realization of a homogeneous Poisson point process.
pub fn cell_population<R: Rng + ?Sized>(
    rng: &mut R,
    center: &Position,
    radius_km: f64,
    density_per_km2: f64,
) -> Vec<Position> {
    let mean = density_per_km2 * hexagon_area(radius_km);
    let count = Poisson::new(mean).map(|p| p.sample(rng) as usize).unwrap_or(0);
    (0..count).map(|_| sample_in_hexagon(rng, center, radius_km)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UserState {
    pub id: usize,
    pub position: Position,
    pub velocity_kmh: f64,
    /// Direction of travel in radians.
    pub heading_rad: f64,
    pub mobility_class: MobilityClass,
    pub cell_id: usize,
}

impl UserState {
    /// Position after `seconds` of straight-line motion.
    pub fn position_at(&self, seconds: f64) -> Position {
        let d = self.velocity_kmh / 3600.0 * seconds;
        Position::new(
            self.position.x_km + d * self.heading_rad.cos(),
            self.position.y_km + d * self.heading_rad.sin(),
        )
    }
}

/// Users of the network and their subcarrier grants.
#[derive(Clone, Debug)]
pub struct Placement {
    pub base_stations: Vec<Position>,
    pub focal: Vec<UserState>,
    /// Other users of the Poisson field, by cell.
    pub background: Vec<Vec<Position>>,
    /// Subcarrier indices granted to each user of each cell; entry 0 of a cell
    /// with a focal user is that focal user.
    pub allocation: Vec<Vec<Vec<usize>>>,
}

impl Placement {
    /// True when no two users of one cell hold the same subcarrier.
    pub fn allocation_is_disjoint(&self) -> bool {
        self.allocation.iter().all(|cell| {
            let mut seen = std::collections::HashSet::new();
            cell.iter().flatten().all(|s| seen.insert(*s))
        })
    }
}

fn shared_indices(config: &NetworkConfig) -> Vec<usize> {
    let stride = config.total_subcarriers / config.n_shared_subcarriers.max(1);
    (0..config.n_shared_subcarriers).map(|k| k * stride + stride / 2).collect()
}

/// Draws the Poisson user field, picks one focal user in each of
/// `n_focal_users` distinct cells (the centre cell first) and grants
/// subcarriers.
pub fn place_users(config: &NetworkConfig, seed: u64) -> Result<Placement> {
    config.validate()?;
    let mut rng: ChaCha8Rng = rng_for(seed, 1, 0);
    let base_stations = hex_centers(config.n_cells, config.cell_radius_km);
    let mut population: Vec<Vec<Position>> = base_stations
        .iter()
        .map(|c| cell_population(&mut rng, c, config.cell_radius_km, config.user_density_per_km2))
        .collect();

    let mut order: Vec<usize> = (1..config.n_cells).collect();
    order.shuffle(&mut rng);
    order.insert(0, 0);
    let chosen: Vec<usize> = order
        .into_iter()
        .filter(|&c| !population[c].is_empty())
        .take(config.n_focal_users)
        .collect();
    if chosen.len() < config.n_focal_users {
        return Err(NetsimError::Config(vec![format!(
            "user_density_per_km2 = {} leaves only {} occupied cells for {} focal users",
            config.user_density_per_km2,
            chosen.len(),
            config.n_focal_users
        )]));
    }

    let mut focal = Vec::with_capacity(chosen.len());
    for (id, &cell) in chosen.iter().enumerate() {
        let pick = rng.random_range(0..population[cell].len());
        let position = population[cell].swap_remove(pick);
        let mobility = config.mobility_of(id);
        focal.push(UserState {
            id,
            position,
            velocity_kmh: mobility.speed_kmh,
            heading_rad: rng.random::<f64>() * std::f64::consts::TAU,
            mobility_class: mobility.class,
            cell_id: cell,
        });
    }

    // Randomized access: shared subcarriers go to the focal user, the rest are
    // dealt out one per background user in random order until exhausted.
    let shared = shared_indices(config);
    let allocation = (0..config.n_cells)
        .map(|cell| {
            let has_focal = chosen.contains(&cell);
            let mut free: Vec<usize> = (0..config.total_subcarriers).filter(|s| !shared.contains(s)).collect();
            free.shuffle(&mut rng);
            let mut grants = Vec::new();
            if has_focal {
                grants.push(shared.clone());
            }
            grants.extend(population[cell].iter().zip(free).map(|(_, s)| vec![s]));
            grants
        })
        .collect();

    Ok(Placement {
        base_stations,
        focal,
        background: population,
        allocation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn honeycomb_sizes_and_spacing() {
        for n in [1, 7, 19] {
            let c = hex_centers(n, 1.0);
            assert_eq!(c.len(), n);
            for (i, a) in c.iter().enumerate() {
                for b in &c[i + 1..] {
                    assert!(a.distance_km(b) >= SQRT3 - 1e-12);
                }
            }
        }
        let c = hex_centers(19, 1.0);
        let ring1 = c[1..7].iter().filter(|p| (p.distance_km(&c[0]) - SQRT3).abs() < 1e-9).count();
        assert_eq!(ring1, 6);
    }

    #[test]
    fn cells_tile_without_overlap() {
        let centers = hex_centers(7, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..2000 {
            let p = sample_in_hexagon(&mut rng, &centers[0], 1.0);
            let owners = centers.iter().filter(|c| hexagon_contains(c, 0.999_999, &p)).count();
            assert!(owners <= 1);
            let nearest = centers
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.distance_km(&p).total_cmp(&b.1.distance_km(&p)))
                .unwrap()
                .0;
            assert_eq!(nearest, 0);
        }
    }

    #[test]
    fn hexagon_area_by_monte_carlo() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let origin = Position::new(0.0, 0.0);
        let n = 200_000;
        let hits = (0..n)
            .filter(|_| {
                let p = Position::new(rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0);
                hexagon_contains(&origin, 1.0, &p)
            })
            .count();
        let area = 4.0 * hits as f64 / n as f64;
        assert!((area - hexagon_area(1.0)).abs() < 0.02);
        assert!((hexagon_area(1.0) - 2.598).abs() < 1e-3);
    }

    #[test]
    fn single_focal_user_sits_in_centre_cell() {
        let c = NetworkConfig {
            n_focal_users: 1,
            ..Default::default()
        };
        let p = place_users(&c, 9).unwrap();
        assert_eq!(p.focal.len(), 1);
        assert_eq!(p.focal[0].cell_id, 0);
        assert!(hexagon_contains(&p.base_stations[0], 1.0, &p.focal[0].position));
    }

    #[test]
    fn focal_users_occupy_distinct_cells() {
        let p = place_users(&NetworkConfig::default(), 17).unwrap();
        let mut cells: Vec<usize> = p.focal.iter().map(|u| u.cell_id).collect();
        cells.sort();
        cells.dedup();
        assert_eq!(cells.len(), 15);
        for u in &p.focal {
            assert!(hexagon_contains(&p.base_stations[u.cell_id], 1.0 + 1e-12, &u.position));
        }
    }

    #[test]
    fn placement_is_reproducible() {
        let c = NetworkConfig::default();
        let a = place_users(&c, 21).unwrap();
        let b = place_users(&c, 21).unwrap();
        assert_eq!(a.focal, b.focal);
        assert_eq!(a.allocation, b.allocation);
        let other = place_users(&c, 22).unwrap();
        assert_ne!(a.focal, other.focal);
    }

    #[test]
    fn allocation_is_disjoint_within_cells() {
        let c = NetworkConfig::default();
        let p = place_users(&c, 23).unwrap();
        assert!(p.allocation_is_disjoint());
        for u in &p.focal {
            assert_eq!(p.allocation[u.cell_id][0], shared_indices(&c));
        }
        let mut broken = p.clone();
        let dup = broken.allocation[0][0][0];
        broken.allocation[0].push(vec![dup]);
        assert!(!broken.allocation_is_disjoint());
    }

    #[test]
    fn poisson_mean_matches_density() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let origin = Position::new(0.0, 0.0);
        let draws = 1000;
        let total: usize = (0..draws)
            .map(|_| cell_population(&mut rng, &origin, 1.0, 500.0).len())
            .sum();
        let mean = total as f64 / draws as f64;
        let expected = 500.0 * hexagon_area(1.0);
        assert!((mean - expected).abs() <= 0.05 * expected, "{mean} vs {expected}");
    }

    #[test]
    fn sparse_field_cannot_fill_cells() {
        let c = NetworkConfig {
            user_density_per_km2: 1e-6,
            ..Default::default()
        };
        assert!(matches!(place_users(&c, 1), Err(NetsimError::Config(_))));
    }

    #[test]
    fn straight_line_motion() {
        let u = UserState {
            id: 0,
            position: Position::new(0.0, 0.0),
            velocity_kmh: 36.0,
            heading_rad: 0.0,
            mobility_class: MobilityClass::Vehicular,
            cell_id: 0,
        };
        let p = u.position_at(100.0);
        assert!((p.x_km - 1.0).abs() < 1e-12 && p.y_km.abs() < 1e-12);
    }
}
