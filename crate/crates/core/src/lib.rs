pub mod correspondence;
pub mod curve;
pub mod develop;
pub mod discs;
pub mod fixtures;
pub mod floer;
pub mod geom;
pub mod intersect;
pub mod oracle;
pub mod par;
pub mod perturbation;
pub mod quilt;
pub mod report;
pub mod runner;
pub mod scenario;
pub mod surface;
pub mod svg;
