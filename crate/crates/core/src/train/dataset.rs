//! In-memory sample sets assembled from EMOG grid files.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use emocpd_autograd::{Scalar, Tensor};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::amino::NUM_CLASSES;
use crate::features::FEATURE_DIM;
use crate::voxel::{read_emog, EmogError, MicroEnvGrid, GRID_LEN, GRID_SIZE};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: EmogError,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("dataset is empty")]
    Empty,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub samples: Vec<MicroEnvGrid>,
}

impl Dataset {
    pub fn new(samples: Vec<MicroEnvGrid>) -> Self {
        Dataset { samples }
    }

    /// Concatenates the grids of every file, in the order given.
    pub fn from_files<P: AsRef<Path>>(paths: &[P]) -> Result<Self, DatasetError> {
        let mut samples = Vec::new();
        for p in paths {
            let path = p.as_ref();
            let file = File::open(path).map_err(|source| DatasetError::Io {
                path: path.to_owned(),
                source,
            })?;
            let grids = read_emog(BufReader::new(file)).map_err(|source| DatasetError::File {
                path: path.to_owned(),
                source,
            })?;
            samples.extend(grids);
        }
        Ok(Dataset { samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.samples.iter().map(|s| s.label.index()).collect()
    }

    pub fn class_histogram(&self) -> [usize; NUM_CLASSES] {
        let mut h = [0; NUM_CLASSES];
        for s in &self.samples {
            h[s.label.index()] += 1;
        }
        h
    }

    /// Sample order for one epoch. Each epoch reads its own ChaCha stream
    /// of the seed, so orders are reproducible and independent of how many
    /// epochs ran before.
    pub fn epoch_order(&self, seed: u64, epoch: u64) -> Vec<usize> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(epoch);
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.shuffle(&mut rng);
        order
    }

    /// Stacks the selected grids into `[B, 7, 20, 20, 20]` plus labels.
    pub fn batch<T: Scalar>(&self, indices: &[usize]) -> (Tensor<T>, Vec<usize>) {
        let mut data = Vec::with_capacity(indices.len() * GRID_LEN);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            let s = &self.samples[i];
            data.extend(s.values.iter().map(|&v| T::from_f64_lossy(v as f64)));
            labels.push(s.label.index());
        }
        let tensor = Tensor::new(vec![indices.len(), FEATURE_DIM, GRID_SIZE, GRID_SIZE, GRID_SIZE], data).expect("grid length is fixed");
        (tensor, labels)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amino::AminoAcid;
    use crate::voxel::write_emog;

    fn grid(i: usize) -> MicroEnvGrid {
        MicroEnvGrid {
            label: AminoAcid::from_index(i % NUM_CLASSES).unwrap(),
            site_id: format!("t/A/{i}"),
            values: vec![i as f32; GRID_LEN],
        }
    }

    #[test]
    fn files_concatenate_and_histogram_sums() {
        let dir = tempfile::tempdir().unwrap();
        let mut paths = Vec::new();
        for f in 0..2 {
            let p = dir.path().join(format!("{f}.emog"));
            let grids: Vec<_> = (0..10).map(|i| grid(f * 10 + i)).collect();
            write_emog(File::create(&p).unwrap(), &grids).unwrap();
            paths.push(p);
        }
        let ds = Dataset::from_files(&paths).unwrap();
        assert_eq!(ds.len(), 20);
        assert_eq!(ds.samples[13].site_id, "t/A/13");
        assert_eq!(ds.class_histogram().iter().sum::<usize>(), 20);

        std::fs::write(&paths[1], b"NOPE").unwrap();
        let err = Dataset::from_files(&paths).unwrap_err();
        assert!(matches!(err, DatasetError::File { source: EmogError::BadMagic, .. }));
    }

    #[test]
    fn shuffle_is_seeded() {
        let ds = Dataset::new((0..30).map(grid).collect());
        assert_eq!(ds.epoch_order(7, 0), ds.epoch_order(7, 0));
        assert_ne!(ds.epoch_order(7, 0), ds.epoch_order(7, 1));
        assert_ne!(ds.epoch_order(7, 0), ds.epoch_order(8, 0));
        let mut o = ds.epoch_order(7, 3);
        o.sort();
        assert_eq!(o, (0..30).collect::<Vec<_>>());
    }

    #[test]
    fn batch_layout() {
        let ds = Dataset::new((0..4).map(grid).collect());
        let (x, y) = ds.batch::<f32>(&[2, 0]);
        assert_eq!(x.shape(), &[2, 7, 20, 20, 20]);
        assert_eq!(x.data()[0], 2.0);
        assert_eq!(x.data()[GRID_LEN], 0.0);
        assert_eq!(y, vec![2, 0]);
    }
}
