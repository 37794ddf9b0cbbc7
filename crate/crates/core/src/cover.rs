//! Transfer-coverage bitmasks shared by the solvers.
//!
//! For each image and each potential host node, a bitmask records which
//! destination nodes could pull the image from that host within its budget
//! (the host always covers itself). A replica set satisfies the transfer
//! condition iff the union of its hosts' masks covers every node.

use alloc::vec::Vec;

use crate::network::{transfer_seconds, E2eTable};

/// Bitmask words per node set.
#[derive(Debug, Clone)]
pub(crate) struct CoverMasks {
    words: usize,
    n: usize,
    /// `masks[image * n + host]` = destinations reachable from `host`.
    masks: Vec<Vec<u64>>,
    full: Vec<u64>,
}

impl CoverMasks {
    /// Build masks for images described by `(size_mb, max_transfer_s)` pairs
    /// over the nodes of `e2e` (in table index order).
    pub fn build(images: &[(f64, f64)], e2e: &E2eTable) -> Self {
        let n = e2e.node_count();
        let words = n.div_ceil(64).max(1);
        let mut full = alloc::vec![0u64; words];
        for d in 0..n {
            full[d / 64] |= 1 << (d % 64);
        }
        let mut masks = Vec::with_capacity(images.len() * n);
        for &(size_mb, max_s) in images {
            for host in 0..n {
                let mut mask = alloc::vec![0u64; words];
                for dst in 0..n {
                    let covered = host == dst
                        || e2e
                            .qos(host, dst)
                            .map(|q| transfer_seconds(size_mb, q) <= max_s)
                            .unwrap_or(false);
                    if covered {
                        mask[dst / 64] |= 1 << (dst % 64);
                    }
                }
                masks.push(mask);
            }
        }
        CoverMasks {
            words,
            n,
            masks,
            full,
        }
    }

    pub fn words(&self) -> usize {
        self.words
    }

    pub fn mask(&self, image: usize, host: usize) -> &[u64] {
        &self.masks[image * self.n + host]
    }

    pub fn full(&self) -> &[u64] {
        &self.full
    }

    pub fn or_into(&self, acc: &mut [u64], image: usize, host: usize) {
        for (a, m) in acc.iter_mut().zip(self.mask(image, host)) {
            *a |= m;
        }
    }

    pub fn is_full(&self, acc: &[u64]) -> bool {
        acc == self.full.as_slice()
    }

    /// Union of the hosts' masks equals the full node set?
    pub fn set_covers(&self, image: usize, hosts: &[usize]) -> bool {
        let mut acc = alloc::vec![0u64; self.words];
        for &h in hosts {
            self.or_into(&mut acc, image, h);
        }
        self.is_full(&acc)
    }
}
