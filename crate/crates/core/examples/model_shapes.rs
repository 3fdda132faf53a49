//! Prints the stage-by-stage shape walk of the default network and compares
//! the closed-form parameter count with the parameters actually allocated.

use emocpd::net::{Model, ModelConfig};

fn main() {
    for (name, cfg) in [("default", ModelConfig::default()), ("uniform(8, 64)", ModelConfig::uniform(8, 64))] {
        let trace = cfg.validate().expect("valid configuration");
        println!("{name}:");
        for stage in &trace {
            println!("  {:<14} {:>4} x {}^3", stage.name, stage.channels, stage.spatial);
        }
        let model = Model::<f32>::new(&cfg, 0).expect("builds");
        println!("  parameters: formula {}, allocated {}\n", cfg.parameter_count(), model.trainable_count());
    }
}
