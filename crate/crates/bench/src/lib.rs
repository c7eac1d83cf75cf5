pub use brokers_core as core;
