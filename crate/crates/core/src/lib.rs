pub mod linalg;
pub mod moment;
pub mod network;
pub mod sdp;
pub mod search;
pub mod witness;
