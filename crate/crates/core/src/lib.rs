//! Map-based personalized k-anonymity cloaking.
//!
//! Queries from users moving on a street map are grouped into cloaking sets
//! once per simulated second. Two queries can share a set when each one can
//! reach the other within its own distance constraint. A set is a maximal
//! clique of the resulting constraint graph, and the location sent on is
//! the mesh of whole streets its members could reach.

pub mod cliques;
pub mod constraint_graph;
pub mod distance;
pub mod engine;
pub mod error;
pub mod map_model;
pub mod mesh;
pub mod metrics;
pub mod simulator;
pub mod spatial_index;
pub mod synth;

pub use cliques::{all_maximal_cliques, CliqueSet, IncrementalCliques};
pub use constraint_graph::{build_constraint_graph, ConstraintGraph, EdgeRule};
pub use distance::{map_distance_matrix, point_distance, BoundedDistanceMatrix};
pub use engine::{
    run_batch, run_sequential, CloakingResult, Engine, EngineConfig, EngineLog, EngineMode, Query,
    QueryState, SuccessMode, TickRecord,
};
pub use error::{Error, Result};
pub use map_model::{load_map, MapPosition, Street, StreetMap, Terminal};
pub use mesh::{cloaking_mesh, expanding_mesh, CloakingMesh, MeshMode};
pub use metrics::{compute_metrics, MetricsReport};
pub use simulator::{generate_users, simulate, SimQuery, SimUser, SpeedProfile, StreamRecord};
pub use spatial_index::QuadTree;
pub use synth::{synthetic_map, SynthConfig};
