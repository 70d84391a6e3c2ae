use crate::types::CoefficientSet;

/// Default bound on the number of cached coefficient sets.
pub const DEFAULT_CACHE_CAPACITY: usize = 256;

/// Previously selected coefficient sets plus a running average of accepted MSE.
///
/// Entries are kept most-recently-used first; the least recently used entry is
/// evicted once `capacity` is exceeded.
#[derive(Debug, Clone)]
pub struct CoefficientCache {
    entries: Vec<CoefficientSet>,
    capacity: usize,
    ema: Option<f64>,
    hits: usize,
    lookups: usize,
}

impl Default for CoefficientCache {
    fn default() -> Self {
        Self::new(DEFAULT_CACHE_CAPACITY)
    }
}

impl CoefficientCache {
    pub fn new(capacity: usize) -> Self {
        Self {
            entries: Vec::new(),
            capacity: capacity.max(1),
            ema: None,
            hits: 0,
            lookups: 0,
        }
    }

    /// Entries in probe (MRU) order.
    pub fn entries(&self) -> &[CoefficientSet] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Current moving average of accepted MSE; `None` before the first full search.
    pub fn ema(&self) -> Option<f64> {
        self.ema
    }

    pub fn hits(&self) -> usize {
        self.hits
    }

    pub fn lookups(&self) -> usize {
        self.lookups
    }

    pub(crate) fn record_lookup(&mut self, hit: bool) {
        self.lookups += 1;
        if hit {
            self.hits += 1;
        }
    }

    pub(crate) fn promote(&mut self, index: usize) {
        let entry = self.entries.remove(index);
        self.entries.insert(0, entry);
    }

    pub(crate) fn insert(&mut self, set: CoefficientSet) {
        if let Some(i) = self.entries.iter().position(|e| e.key() == set.key()) {
            self.promote(i);
            return;
        }
        self.entries.insert(0, set);
        self.entries.truncate(self.capacity);
    }

    pub(crate) fn update_ema(&mut self, mse: f64, alpha: f64) {
        self.ema = Some(match self.ema {
            None => mse,
            Some(ema) => (1.0 - alpha) * ema + alpha * mse,
        });
    }
}
