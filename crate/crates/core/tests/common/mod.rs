//! Shared helpers for the oracle test suites: random instances drawn from
//! uniform user drops, and a small adaptive Simpson integrator kept
//! independent of the crate's own quadrature.
#![allow(dead_code)] // each test target uses a different subset

use das_core::geometry::{
    build_pathloss_matrix, default_cell_radius, sample_uniform_users, CellLayout, LinkBudget,
    PathlossMatrix,
};
use das_core::modes::{enumerate_ideal, ModeGroups, TransmissionMode};
use das_core::rate::{conditioning_number, EvalPolicy, UserGains};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// One randomly drawn evaluation instance: a mode on a uniform user drop.
pub struct Instance {
    pub n_ports: usize,
    pub k_users: usize,
    pub mode: TransmissionMode,
    pub groups: ModeGroups,
    pub gains: PathlossMatrix,
    pub budget: LinkBudget,
}

impl Instance {
    pub fn user_gains(&self, user: usize) -> UserGains {
        UserGains::for_user(&self.groups, user, &self.gains)
    }

    /// First user that has both a serving and an interference set.
    pub fn interference_limited_user(&self) -> Option<usize> {
        (0..self.k_users).find(|&u| {
            !self.groups.serving(u).is_empty() && !self.groups.interference(u).is_empty()
        })
    }
}

pub fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    loop {
        let n_ports = rng.random_range(1..=4);
        let k_users = rng.random_range(1..=4);
        let layout = CellLayout::circular(n_ports, default_cell_radius(), 3.0).unwrap();
        let users = sample_uniform_users(k_users, default_cell_radius(), rng);
        let Ok(gains) = build_pathloss_matrix(&users, &layout) else {
            continue;
        };
        let candidates = enumerate_ideal(n_ports, k_users).unwrap();
        let mode = candidates.modes().choose(rng).unwrap().clone();
        let groups = ModeGroups::derive(&mode, k_users).unwrap();
        let budget = LinkBudget::from_snr_db(rng.random_range(-10.0..40.0));
        return Instance {
            n_ports,
            k_users,
            mode,
            groups,
            gains,
            budget,
        };
    }
}

/// Random instance whose every active user is well conditioned (largest
/// partial-fraction term below `bound`).
pub fn well_conditioned_instance(rng: &mut ChaCha8Rng, bound: f64) -> Instance {
    let policy = EvalPolicy::default();
    loop {
        let inst = random_instance(rng);
        let ok = (0..inst.k_users).all(|u| {
            let g = inst.user_gains(u);
            !g.is_active() || conditioning_number(&g, &policy) <= bound
        });
        if ok {
            return inst;
        }
    }
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Adaptive Simpson on `[a, b]`, independent of the crate's integrator.
pub fn simpson<F: Fn(f64) -> f64 + Copy>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson_rule<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
    }
    fn recurse<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let left = simpson_rule(f, a, m);
        let right = simpson_rule(f, m, b);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            recurse(f, a, m, left, 0.5 * tol, depth - 1)
                + recurse(f, m, b, right, 0.5 * tol, depth - 1)
        }
    }
    let whole = simpson_rule(&f, a, b);
    recurse(&f, a, b, whole, tol, 48)
}
