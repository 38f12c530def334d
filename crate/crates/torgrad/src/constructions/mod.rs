//! Standard resolutions, Rokhlin towers for ℤ and cheap complexes.

pub mod cheap;
pub mod resolutions;
pub mod rokhlin;

pub use cheap::{
    degree0_cheap, degree0_cheap_with_base, integer_towers, integers_cheap, integers_tile_for, is_cheap, kappa,
    supp1_chain_extend, supp1_extend, tower_assembly, towers_partition, CheapEmbedding, Degree0Cheap,
    Supp1Extension, TowerData,
};
pub use resolutions::{GrMatrix, ResolutionData};
pub use rokhlin::{integers_dyn_resolution, integers_embedding, rokhlin_partition, IntegersResolution, RokhlinReport, RokhlinTower};
