//! Synthetic kernels: templates, generation, a named suite and a text file
//! format.

pub mod format;
pub mod generate;
pub mod spec;
pub mod source;
pub mod suite;
pub mod template;

pub use format::{from_text, load, save, to_text, FORMAT_VERSION};
pub use generate::generate;
pub use spec::{KernelSpec, TbResources, TbSpec, WarpProgram};
pub use source::KernelRef;
pub use suite::{desk_suite, memory_suite, standard_suite, template, template_names};
pub use template::{KernelTemplate, LocalityProfile, Mix};
