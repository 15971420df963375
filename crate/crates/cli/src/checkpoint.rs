//! Packing a trained model (with its feature normalization and process
//! roster) into the binary checkpoint format, and back.
//!
//! Section entries are written in a fixed order, so identical models
//! produce byte-identical files.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use renewal_core::features::ChannelStats;
use renewal_core::model::{output_width, LossMode, ModelConfig, TrainedModel};
use renewal_core::neural::{read_checkpoint, write_checkpoint, Adam, CheckpointData, Network};
use renewal_core::{Error, Result};

/// A checkpoint's full contents.
pub struct Loaded {
    pub model: TrainedModel,
    pub stats: ChannelStats,
    pub processes: Vec<String>,
}

pub fn pack(model: &TrainedModel, stats: &ChannelStats, processes: &[String]) -> CheckpointData {
    let cfg = &model.config;
    let net = &model.network;
    let mut data = CheckpointData {
        strings: vec![("mode".into(), cfg.mode.name().into())],
        integers: vec![
            ("channels".into(), net.features as u64),
            ("hidden".into(), cfg.hidden as u64),
            ("processes".into(), cfg.processes as u64),
            ("iterations".into(), cfg.iterations as u64),
            ("seed".into(), cfg.seed),
            ("adam.step".into(), model.optimizer.step),
        ],
        lists: vec![
            ("mu_bar".into(), cfg.mu_bar.clone()),
            ("k_max".into(), vec![cfg.k_max]),
            ("learning_rate".into(), vec![cfg.learning_rate]),
            ("clip".into(), vec![cfg.clip_threshold]),
            ("stats.mean".into(), stats.mean.clone()),
            ("stats.std".into(), stats.std.clone()),
        ],
        tensors: Vec::new(),
    };
    for (i, p) in processes.iter().enumerate() {
        data.strings.push((format!("process.{i}"), p.clone()));
    }
    let names = net.tensor_names();
    for (name, tensor) in names.iter().zip(net.tensors()) {
        data.tensors.push((name.clone(), tensor.clone()));
    }
    for (name, m) in names.iter().zip(&model.optimizer.m) {
        data.tensors.push((format!("adam.m.{name}"), m.clone()));
    }
    for (name, v) in names.iter().zip(&model.optimizer.v) {
        data.tensors.push((format!("adam.v.{name}"), v.clone()));
    }
    data
}

fn scalar(data: &CheckpointData, key: &str) -> Result<f64> {
    let list = data.get_list(key)?;
    if list.len() != 1 {
        return Err(Error::Checkpoint(format!(
            "list {key:?} should hold one value, has {}",
            list.len()
        )));
    }
    Ok(list[0])
}

pub fn unpack(data: &CheckpointData) -> Result<Loaded> {
    let channels = data.get_integer("channels")? as usize;
    let hidden = data.get_integer("hidden")? as usize;
    let processes = data.get_integer("processes")? as usize;
    let mode = LossMode::parse(data.get_string("mode")?)?;
    let config = ModelConfig {
        hidden,
        processes,
        mode,
        k_max: scalar(data, "k_max")?,
        mu_bar: data.get_list("mu_bar")?.to_vec(),
        learning_rate: scalar(data, "learning_rate")?,
        iterations: data.get_integer("iterations")? as usize,
        clip_threshold: scalar(data, "clip")?,
        seed: data.get_integer("seed")?,
    };
    config.validate()?;

    let mut process_ids = Vec::with_capacity(processes);
    for i in 0..processes {
        process_ids.push(data.get_string(&format!("process.{i}"))?.to_string());
    }

    let stats = ChannelStats {
        mean: data.get_list("stats.mean")?.to_vec(),
        std: data.get_list("stats.std")?.to_vec(),
    };
    if stats.mean.len() != channels || stats.std.len() != channels {
        return Err(Error::Checkpoint(format!(
            "normalization stats cover {}/{} channels, network expects {channels}",
            stats.mean.len(),
            stats.std.len()
        )));
    }

    // Shape the network with a throwaway init, then overwrite every
    // tensor from the file; mismatched shapes mean a corrupt or foreign
    // checkpoint.
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut network = Network::init(channels, hidden, output_width(processes), &mut rng)?;
    let names = network.tensor_names();
    let mut optimizer = Adam::new(config.learning_rate, &network.tensors());
    optimizer.step = data.get_integer("adam.step")?;

    let restore = |dst: &mut renewal_core::neural::Tensor, key: &str| -> Result<()> {
        let src = data.get_tensor(key)?;
        if src.shape() != dst.shape() {
            return Err(Error::Checkpoint(format!(
                "tensor {key:?} has shape {:?}, network expects {:?}",
                src.shape(),
                dst.shape()
            )));
        }
        dst.data_mut().copy_from_slice(src.data());
        Ok(())
    };
    for (name, tensor) in names.iter().zip(network.tensors_mut()) {
        restore(tensor, name)?;
    }
    for (name, m) in names.iter().zip(optimizer.m.iter_mut()) {
        restore(m, &format!("adam.m.{name}"))?;
    }
    for (name, v) in names.iter().zip(optimizer.v.iter_mut()) {
        restore(v, &format!("adam.v.{name}"))?;
    }

    Ok(Loaded {
        model: TrainedModel { config, network, optimizer },
        stats,
        processes: process_ids,
    })
}

pub fn save(
    path: &Path,
    model: &TrainedModel,
    stats: &ChannelStats,
    processes: &[String],
) -> Result<()> {
    write_checkpoint(path, &pack(model, stats, processes))
}

pub fn load(path: &Path) -> Result<Loaded> {
    unpack(&read_checkpoint(path)?)
}
