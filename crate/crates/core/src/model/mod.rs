//! Architecture parsing, hyperparameters and the layer graph.

mod arch;
mod graph;
mod hyper;

pub use arch::{parse_arch, parse_arch_with_base, ArchSpec, Stage, ALIASES};
pub use graph::{
    build, ForwardMode, Head, HeadLayout, InitPolicy, Layer, ModelGraph, NamedLayer, INIT_STD,
    POST_SLOPE,
};
pub use hyper::Hyper;

/// Parses `arch` and builds it with its default hyperparameters.
pub fn build_named(arch: &str, init: InitPolicy) -> crate::Result<ModelGraph> {
    let spec = parse_arch(arch)?;
    build(&spec, &Hyper::for_arch(&spec), init)
}
