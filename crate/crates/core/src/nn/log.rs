//! Per-epoch training history.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_mse: f64,
    pub val_mse: f64,
    pub lr: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingLog {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
}

impl TrainingLog {
    pub fn best_val(&self) -> f64 {
        self.epochs.get(self.best_epoch).map_or(f64::NAN, |e| e.val_mse)
    }

    /// `epoch,train_mse,val_mse,lr` rows.
    pub fn to_csv(&self, config_hash: &str) -> String {
        let mut s = format!("# config_hash={config_hash}\nepoch,train_mse,val_mse,lr\n");
        for e in &self.epochs {
            s.push_str(&format!("{},{},{},{}\n", e.epoch, e.train_mse, e.val_mse, e.lr));
        }
        s
    }
}
