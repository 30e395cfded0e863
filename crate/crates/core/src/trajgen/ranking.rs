//! Which peers a vehicle must maneuver around.

use super::TrajError;
use crate::geom::Vec2;
use std::collections::BTreeSet;

/// Effective cruise speeds closer than this are treated as equal.
pub const RANK_TOLERANCE: f64 = 0.05;

/// What a vehicle broadcasts to peers in range each sensing period.
#[derive(Debug, Clone, PartialEq)]
pub struct PeerReport {
    pub id: u32,
    pub position: Vec2,
    pub velocity: Vec2,
    pub v_c: f64,
    /// Desired planar velocity.
    pub v_d: Vec2,
    pub r_c: f64,
    pub v_w_op: f64,
}

/// Cruise speed used for ranking: zero for a vehicle that is over its wind
/// limit or hovering.
pub fn effective_cruise_speed(v_c: f64, v_d: &Vec2, v_air: f64, v_w_op: f64) -> f64 {
    if v_air > v_w_op || v_d.norm() == 0.0 {
        0.0
    } else {
        v_c
    }
}

/// True if a vehicle with (`v_self`, `id_self`) must maneuver for one with (`v_peer`, `id_peer`).
pub fn must_maneuver(v_self: f64, id_self: u32, v_peer: f64, id_peer: u32) -> bool {
    if (v_self - v_peer).abs() <= RANK_TOLERANCE {
        id_self > id_peer
    } else {
        v_self > v_peer
    }
}

/// IDs of the peers `me` must maneuver around. The local wind estimate
/// `v_air_est` stands in for every vehicle's wind since peers are in range.
pub fn rank_vehicles(me: &PeerReport, peers: &[PeerReport], v_air_est: f64) -> Result<Vec<u32>, TrajError> {
    let mut seen = BTreeSet::from([me.id]);
    for p in peers {
        if !seen.insert(p.id) {
            return Err(TrajError::DuplicateId(p.id));
        }
    }
    let v_self = effective_cruise_speed(me.v_c, &me.v_d, v_air_est, me.v_w_op);
    Ok(peers
        .iter()
        .filter(|p| must_maneuver(v_self, me.id, effective_cruise_speed(p.v_c, &p.v_d, v_air_est, p.v_w_op), p.id))
        .map(|p| p.id)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(id: u32, v_c: f64, moving: bool, v_w_op: f64) -> PeerReport {
        PeerReport {
            id,
            position: Vec2::zeros(),
            velocity: Vec2::zeros(),
            v_c,
            v_d: if moving { Vec2::new(v_c, 0.0) } else { Vec2::zeros() },
            r_c: 1.0,
            v_w_op,
        }
    }

    #[test]
    fn over_winded_peer_is_avoided() {
        let me = report(1, 1.0, true, 20.0);
        let peer = report(2, 1.0, true, 8.0);
        assert_eq!(rank_vehicles(&me, &[peer], 9.0).unwrap(), vec![2]);
    }

    #[test]
    fn hovering_peer_is_avoided() {
        let me = report(1, 1.0, true, 20.0);
        let peer = report(2, 1.0, false, 20.0);
        assert_eq!(effective_cruise_speed(1.0, &Vec2::zeros(), 0.0, 20.0), 0.0);
        assert_eq!(rank_vehicles(&me, &[peer], 0.0).unwrap(), vec![2]);
    }

    #[test]
    fn ties_go_to_the_higher_id() {
        let a = report(3, 1.0, true, 20.0);
        let b = report(5, 1.0, true, 20.0);
        assert!(rank_vehicles(&a, std::slice::from_ref(&b), 0.0).unwrap().is_empty());
        assert_eq!(rank_vehicles(&b, &[a], 0.0).unwrap(), vec![3]);
    }

    #[test]
    fn exactly_one_of_each_pair_maneuvers() {
        for (va, vb) in [(1.0, 1.02), (1.0, 1.5), (0.0, 0.0), (2.0, 0.3)] {
            let x = must_maneuver(va, 1, vb, 2);
            let y = must_maneuver(vb, 2, va, 1);
            assert!(x ^ y, "{va} {vb}");
        }
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let me = report(1, 1.0, true, 20.0);
        let peers = [report(2, 1.0, true, 20.0), report(2, 1.0, true, 20.0)];
        assert_eq!(rank_vehicles(&me, &peers, 0.0), Err(TrajError::DuplicateId(2)));
        assert_eq!(rank_vehicles(&me, &[report(1, 1.0, true, 20.0)], 0.0), Err(TrajError::DuplicateId(1)));
    }
}
