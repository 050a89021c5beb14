//! Exact k-nearest-object search on weighted road networks.
//!
//! Every vertex stores its k nearest candidate objects, so a query is a
//! slice read. Lists are built over a distance-preserving augmentation of
//! the road network (the BN-Graph) and kept exact under object insertion and
//! deletion.
//!
//! ```
//! use knn_index::{Algorithm, Bundle, ObjectSet, QueryEngine, RoadNetwork};
//!
//! let g = RoadNetwork::from_edges(3, [(0, 1, 1), (1, 2, 1)]).unwrap();
//! let objects = ObjectSet::from_vertices(3, [0, 2]).unwrap();
//! let bundle = Bundle::build(&g, objects, 2, Algorithm::Bidirectional).unwrap();
//! let nearest = QueryEngine::new(&bundle.index).knn(1, 1).unwrap();
//! assert_eq!((nearest[0].object, nearest[0].distance), (0, 1));
//! ```

pub mod bn_graph;
pub mod builder;
pub mod error;
pub mod graph;
pub mod hash;
pub mod knn;
pub mod maintenance;
pub mod objects;
pub mod oracle;
pub mod par;
pub mod persistence;
pub mod query;

pub use bn_graph::{build_bn_graph, BnGraph, BuildStats, VertexOrder};
pub use builder::{build_index, Algorithm};
pub use error::{Error, Result};
pub use graph::{
    generate_grid, generate_random_connected, parse_dimacs_gr, Distance, RoadNetwork, VertexId, Weight,
    WeightRange, INFINITY,
};
pub use knn::{KnnEntry, KnnIndex, PartialKnn};
pub use maintenance::{delete_object, insert_object, UpdateKind, UpdateReport};
pub use objects::{load_objects, sample_objects, ObjectSet};
pub use oracle::{dijkstra_knn, dijkstra_sssp, verify_bn_graph, verify_index, VerificationReport};
pub use par::Execution;
pub use persistence::{load_bundle, load_bundle_for, save_bundle, Bundle};
pub use query::{knn_query, QueryEngine};
