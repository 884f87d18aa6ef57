//! Bundled example inputs.

use crate::flow::FlowScene;
use crate::io::{parse_graph, GraphFile, IoError};
use crate::scalar::Scalar;

/// Two states, a 1.6 s self-loop and an edge that gets faster after t = 3.5.
pub const TWO_STATE_JSON: &str = include_str!("../../../fixtures/two_state.json");

/// 3×3 grid, goal in the corner, where the fastest route loops before the
/// slow middle edge speeds up at t = 9.5.
pub const GRID3X3_JSON: &str = include_str!("../../../fixtures/grid3x3.json");

/// 200-state roadmap in a 2×2-cell gyre that weakens at t = 10 and t = 20.
pub const GYRE_SCENE_JSON: &str = include_str!("../../../fixtures/gyre_scene.json");

/// The gyre scene with the flow switched off.
pub const STILL_SCENE_JSON: &str = include_str!("../../../fixtures/still_scene.json");

pub fn gyre_scene() -> FlowScene {
    FlowScene::from_json(GYRE_SCENE_JSON).expect("bundled scene is valid")
}

pub fn still_scene() -> FlowScene {
    FlowScene::from_json(STILL_SCENE_JSON).expect("bundled scene is valid")
}

pub fn two_state<T: Scalar>() -> GraphFile<T> {
    parse_graph(TWO_STATE_JSON).expect("bundled fixture parses")
}

pub fn grid3x3<T: Scalar>() -> Result<GraphFile<T>, IoError> {
    parse_graph(GRID3X3_JSON)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::min_travel_exhaustive;
    use crate::scalar::Fixed;
    use crate::tdsp::{default_cap, extract_path, solve};

    #[test]
    fn grid_optimum_cycles() {
        let g = grid3x3::<Fixed>().unwrap().graph;
        let sol = solve(&g, default_cap(&g)).unwrap();
        let s1 = g.state(1).unwrap();
        let t0 = Fixed::from_f64(0.5);
        let path = extract_path(&g, &sol.policy, &sol.travel, s1, t0).unwrap();
        let ids: Vec<u64> = path.states.iter().map(|&s| g.id(s)).collect();
        assert_eq!(ids, vec![1, 4, 5, 2, 1, 4, 5, 2, 1, 4, 5, 6, 9]);
        assert!(path.has_cycle());
        assert_eq!(path.travel_time, Fixed::from_f64(12.0));
        let oracle = min_travel_exhaustive(&g, s1, t0).unwrap();
        assert_eq!(oracle.time, path.travel_time);
        assert_eq!(oracle.walk, path.states);
    }
}
