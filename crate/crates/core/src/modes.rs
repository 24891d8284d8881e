//! Transmission modes, serving/interference groups, and candidate-set
//! generation.
//!
//! A transmission mode assigns each DA port the index of the user it serves
//! (0 = port off). The exhaustive ("ideal") candidate set contains every
//! admissible mode except single-user modes that leave some ports idle, since
//! serving one user with all ports dominates serving it with fewer. The
//! reduced candidate set starts from the nearest-user assignment and keeps
//! every on/off masking with more than one active port, plus one full-power
//! single-user mode for the globally closest user, for `2^N - N` candidates.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::geometry::DistanceMatrix;

/// Candidate counts above this are rejected by [`enumerate_ideal`].
pub const DEFAULT_ENUMERATION_CAP: u128 = 1_000_000;

#[derive(Debug, Error, PartialEq)]
pub enum ModeError {
    #[error("mode must have at least one port")]
    EmptyAssignments,
    #[error("mode must keep at least one port on")]
    AllPortsOff,
    #[error("port {port} serves user {user}, but only {k_users} users exist")]
    UserOutOfRange {
        port: usize,
        user: usize,
        k_users: usize,
    },
    #[error("n_ports and k_users must both be at least 1")]
    EmptySystem,
    #[error("ideal candidate set would hold {required} modes, above the cap of {cap}")]
    CandidateCapExceeded { required: u128, cap: u128 },
}

/// Port-to-user assignment vector; entry `j` is the user served by port
/// `j+1`, with 0 meaning the port is off.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct TransmissionMode {
    assignments: Vec<usize>,
}

impl TransmissionMode {
    pub fn new(assignments: Vec<usize>) -> Result<Self, ModeError> {
        if assignments.is_empty() {
            return Err(ModeError::EmptyAssignments);
        }
        if assignments.iter().all(|&u| u == 0) {
            return Err(ModeError::AllPortsOff);
        }
        Ok(Self { assignments })
    }

    pub fn assignments(&self) -> &[usize] {
        &self.assignments
    }

    pub fn n_ports(&self) -> usize {
        self.assignments.len()
    }

    /// Number of active (on) ports, `N_A`.
    pub fn active_ports(&self) -> usize {
        self.assignments.iter().filter(|&&u| u > 0).count()
    }

    /// Number of distinct served users, `K_A`.
    pub fn active_users(&self) -> usize {
        let mut seen: Vec<usize> = self
            .assignments
            .iter()
            .copied()
            .filter(|&u| u > 0)
            .collect();
        seen.sort_unstable();
        seen.dedup();
        seen.len()
    }

    pub fn max_user(&self) -> usize {
        self.assignments.iter().copied().max().unwrap_or(0)
    }
}

impl TryFrom<Vec<usize>> for TransmissionMode {
    type Error = ModeError;

    fn try_from(v: Vec<usize>) -> Result<Self, ModeError> {
        Self::new(v)
    }
}

impl From<TransmissionMode> for Vec<usize> {
    fn from(m: TransmissionMode) -> Self {
        m.assignments
    }
}

impl fmt::Display for TransmissionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, u) in self.assignments.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{u}")?;
        }
        write!(f, "]")
    }
}

/// Per-user serving sets, the active-port set, and per-user interference
/// sets, all holding 0-based port indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModeGroups {
    serving: Vec<Vec<usize>>,
    active: Vec<usize>,
    interference: Vec<Vec<usize>>,
}

impl ModeGroups {
    /// Split the mode's ports into `G_i` (serving user `i`), the active set
    /// `G_T`, and the complements `G_T \ G_i`.
    pub fn derive(mode: &TransmissionMode, k_users: usize) -> Result<Self, ModeError> {
        let mut serving = vec![Vec::new(); k_users];
        let mut active = Vec::new();
        for (port, &user) in mode.assignments().iter().enumerate() {
            if user == 0 {
                continue;
            }
            if user > k_users {
                return Err(ModeError::UserOutOfRange {
                    port,
                    user,
                    k_users,
                });
            }
            serving[user - 1].push(port);
            active.push(port);
        }
        let interference = serving
            .iter()
            .map(|g| {
                if g.is_empty() {
                    // Inactive users have no interference set; their rate is 0.
                    Vec::new()
                } else {
                    active.iter().copied().filter(|p| !g.contains(p)).collect()
                }
            })
            .collect();
        Ok(Self {
            serving,
            active,
            interference,
        })
    }

    pub fn k_users(&self) -> usize {
        self.serving.len()
    }

    /// Ports serving user `i` (0-based user index).
    pub fn serving(&self, user: usize) -> &[usize] {
        &self.serving[user]
    }

    /// Active ports interfering with user `i`.
    pub fn interference(&self, user: usize) -> &[usize] {
        &self.interference[user]
    }

    pub fn active_ports(&self) -> &[usize] {
        &self.active
    }

    pub fn is_active(&self, user: usize) -> bool {
        !self.serving[user].is_empty()
    }
}

/// Shorthand for [`ModeGroups::derive`].
pub fn derive_groups(mode: &TransmissionMode, k_users: usize) -> Result<ModeGroups, ModeError> {
    ModeGroups::derive(mode, k_users)
}

/// How a candidate set was generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Ideal,
    MinDistance,
}

/// Deduplicated, deterministically ordered collection of candidate modes.
///
/// Serializes as a bare array of assignment arrays, e.g. `[[2,1],[1,1]]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateSet {
    modes: Vec<TransmissionMode>,
    provenance: Provenance,
}

impl Serialize for CandidateSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.modes.serialize(serializer)
    }
}

impl CandidateSet {
    fn new(provenance: Provenance) -> Self {
        Self {
            modes: Vec::new(),
            provenance,
        }
    }

    /// Assemble a set from explicit modes, deduplicating but keeping order.
    pub fn from_modes(modes: Vec<TransmissionMode>, provenance: Provenance) -> Self {
        let mut set = Self::new(provenance);
        let mut seen = HashSet::new();
        for mode in modes {
            set.push_unique(&mut seen, mode);
        }
        set
    }

    fn push_unique(&mut self, seen: &mut HashSet<Vec<usize>>, mode: TransmissionMode) {
        if seen.insert(mode.assignments().to_vec()) {
            self.modes.push(mode);
        }
    }

    pub fn modes(&self) -> &[TransmissionMode] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn iter(&self) -> std::slice::Iter<'_, TransmissionMode> {
        self.modes.iter()
    }
}

impl<'a> IntoIterator for &'a CandidateSet {
    type Item = &'a TransmissionMode;
    type IntoIter = std::slice::Iter<'a, TransmissionMode>;

    fn into_iter(self) -> Self::IntoIter {
        self.modes.iter()
    }
}

/// Size of the exhaustive candidate set: `(K+1)^N - K*(2^N - 2) - 1`.
pub fn ideal_count(n_ports: usize, k_users: usize) -> u128 {
    let k = k_users as u128;
    let all = (k + 1).pow(n_ports as u32);
    let partial_single_user = k * (2u128.pow(n_ports as u32) - 2);
    all - partial_single_user - 1
}

/// Size of the minimum-distance candidate set in the generic case: `2^N - N`.
pub fn proposed_count(n_ports: usize) -> u128 {
    2u128.pow(n_ports as u32) - n_ports as u128
}

/// Every admissible mode except the all-off vector and single-user modes
/// with idle ports, in lexicographic order of the assignment vector.
pub fn enumerate_ideal(n_ports: usize, k_users: usize) -> Result<CandidateSet, ModeError> {
    enumerate_ideal_capped(n_ports, k_users, DEFAULT_ENUMERATION_CAP)
}

/// [`enumerate_ideal`] with an explicit candidate-count cap.
pub fn enumerate_ideal_capped(
    n_ports: usize,
    k_users: usize,
    cap: u128,
) -> Result<CandidateSet, ModeError> {
    if n_ports == 0 || k_users == 0 {
        return Err(ModeError::EmptySystem);
    }
    let required = ideal_count(n_ports, k_users);
    if required > cap {
        return Err(ModeError::CandidateCapExceeded { required, cap });
    }
    let mut set = CandidateSet::new(Provenance::Ideal);
    let mut assignments = vec![0usize; n_ports];
    loop {
        let n_active = assignments.iter().filter(|&&u| u > 0).count();
        if n_active > 0 {
            let distinct = {
                let mut users: Vec<usize> =
                    assignments.iter().copied().filter(|&u| u > 0).collect();
                users.sort_unstable();
                users.dedup();
                users.len()
            };
            // Single-user modes are only admitted at full port usage.
            if !(distinct == 1 && n_active < n_ports) {
                set.modes.push(TransmissionMode {
                    assignments: assignments.clone(),
                });
            }
        }
        // Odometer increment, rightmost digit fastest: lexicographic order.
        let mut pos = n_ports;
        loop {
            if pos == 0 {
                debug_assert_eq!(set.len() as u128, required);
                return Ok(set);
            }
            pos -= 1;
            if assignments[pos] < k_users {
                assignments[pos] += 1;
                break;
            }
            assignments[pos] = 0;
        }
    }
}

/// Reduced candidate set from the nearest-user base mode and its on/off
/// maskings, plus the full-power mode for the globally closest user.
///
/// Ties (equal distances) break toward the lowest user index, and the
/// argmin over all pairs toward lowest user then lowest port. Masked modes
/// with at most one active port are dropped; duplicates collapse.
pub fn generate_min_distance_candidates(distances: &DistanceMatrix) -> CandidateSet {
    let n = distances.n_ports();
    let base: Vec<usize> = (0..n).map(|j| distances.nearest_user(j) + 1).collect();

    let mut set = CandidateSet::new(Provenance::MinDistance);
    let mut seen = HashSet::new();
    set.push_unique(
        &mut seen,
        TransmissionMode {
            assignments: base.clone(),
        },
    );
    for mask in 1u64..(1u64 << n) {
        let masked: Vec<usize> = (0..n)
            .map(|j| if mask >> j & 1 == 1 { base[j] } else { 0 })
            .collect();
        if masked.iter().filter(|&&u| u > 0).count() > 1 {
            set.push_unique(
                &mut seen,
                TransmissionMode {
                    assignments: masked,
                },
            );
        }
    }
    let (closest_user, _) = distances.global_argmin();
    set.push_unique(
        &mut seen,
        TransmissionMode {
            assignments: vec![closest_user + 1; n],
        },
    );
    set
}
