use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};

/// Highest truncation degree supported by the jet engine.
pub const MAX_ORDER: usize = 4;

/// Largest number of variables a jet may carry (multi-index packing uses 4 bits per slot).
pub const MAX_DIM: usize = 16;

/// Index bookkeeping shared by every jet in `dim` variables.
///
/// Multi-indices are stored graded: all indices of total degree 0, then 1, and
/// so on up to [`MAX_ORDER`]. A jet of order `k` therefore owns exactly the
/// first `counts[k]` slots, and truncation is a prefix operation.
#[derive(Debug)]
pub struct Layout {
    dim: usize,
    indices: Vec<Vec<u8>>,
    degrees: Vec<usize>,
    counts: [usize; MAX_ORDER + 1],
    lookup: HashMap<u64, usize>,
    // (left, right, out) triples of the truncated Cauchy product, sorted by `out`.
    products: Vec<(u32, u32, u32)>,
    product_start: Vec<usize>,
    // shift[v][i] = slot of indices[i] + e_v, for |indices[i]| < MAX_ORDER.
    shift: Vec<Vec<u32>>,
    factorials: Vec<f64>,
}

fn pack(alpha: &[u8]) -> u64 {
    alpha
        .iter()
        .enumerate()
        .fold(0u64, |acc, (i, &a)| acc | ((a as u64) << (4 * i)))
}

fn compositions(dim: usize, degree: usize, prefix: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
    if prefix.len() + 1 == dim {
        let used: usize = prefix.iter().map(|&a| a as usize).sum();
        let mut alpha = prefix.clone();
        alpha.push((degree - used) as u8);
        out.push(alpha);
        return;
    }
    let used: usize = prefix.iter().map(|&a| a as usize).sum();
    for a in (0..=degree - used).rev() {
        prefix.push(a as u8);
        compositions(dim, degree, prefix, out);
        prefix.pop();
    }
}

impl Layout {
    fn build(dim: usize) -> Self {
        let mut indices = Vec::new();
        let mut degrees = Vec::new();
        let mut counts = [0usize; MAX_ORDER + 1];
        for degree in 0..=MAX_ORDER {
            let mut level = Vec::new();
            compositions(dim, degree, &mut Vec::new(), &mut level);
            degrees.extend(std::iter::repeat(degree).take(level.len()));
            indices.extend(level);
            counts[degree] = indices.len();
        }
        let lookup: HashMap<u64, usize> = indices
            .iter()
            .enumerate()
            .map(|(i, a)| (pack(a), i))
            .collect();

        let mut products = Vec::new();
        for (i, a) in indices.iter().enumerate() {
            for (j, b) in indices.iter().enumerate() {
                if degrees[i] + degrees[j] > MAX_ORDER {
                    continue;
                }
                let sum: Vec<u8> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                let out = lookup[&pack(&sum)];
                products.push((i as u32, j as u32, out as u32));
            }
        }
        products.sort_by_key(|&(i, j, out)| (out, i, j));
        let mut product_start = vec![0usize; indices.len() + 1];
        for &(_, _, out) in &products {
            product_start[out as usize + 1] += 1;
        }
        for k in 0..indices.len() {
            product_start[k + 1] += product_start[k];
        }

        let shift = (0..dim)
            .map(|v| {
                indices[..counts[MAX_ORDER - 1]]
                    .iter()
                    .map(|a| {
                        let mut b = a.clone();
                        b[v] += 1;
                        lookup[&pack(&b)] as u32
                    })
                    .collect()
            })
            .collect();

        let factorials = indices
            .iter()
            .map(|a| {
                a.iter()
                    .map(|&k| (1..=k as u64).product::<u64>() as f64)
                    .product()
            })
            .collect();

        Layout {
            dim,
            indices,
            degrees,
            counts,
            lookup,
            products,
            product_start,
            shift,
            factorials,
        }
    }

    /// Shared layout for `dim` variables. Layouts are built once and cached.
    pub fn get(dim: usize) -> Result<Arc<Layout>> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::Shape(format!(
                "jets support 1..={MAX_DIM} variables, got {dim}"
            )));
        }
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Layout>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("layout cache poisoned");
        Ok(guard
            .entry(dim)
            .or_insert_with(|| Arc::new(Layout::build(dim)))
            .clone())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of coefficients carried by a jet of the given order.
    pub fn len(&self, order: usize) -> usize {
        self.counts[order]
    }

    pub fn multi_index(&self, slot: usize) -> &[u8] {
        &self.indices[slot]
    }

    pub fn degree(&self, slot: usize) -> usize {
        self.degrees[slot]
    }

    pub fn slot(&self, alpha: &[usize]) -> Result<usize> {
        if alpha.len() != self.dim {
            return Err(Error::Shape(format!(
                "multi-index has {} entries, expected {}",
                alpha.len(),
                self.dim
            )));
        }
        let degree: usize = alpha.iter().sum();
        if degree > MAX_ORDER {
            return Err(Error::OrderExceeded {
                degree,
                order: MAX_ORDER,
            });
        }
        let packed: Vec<u8> = alpha.iter().map(|&a| a as u8).collect();
        Ok(self.lookup[&pack(&packed)])
    }

    pub(crate) fn factorial(&self, slot: usize) -> f64 {
        self.factorials[slot]
    }

    /// Product triples whose output slot lies below `len`.
    pub(crate) fn products_below(&self, len: usize) -> &[(u32, u32, u32)] {
        &self.products[..self.product_start[len]]
    }

    /// Product triples writing into `out`.
    pub(crate) fn products_into(&self, out: usize) -> &[(u32, u32, u32)] {
        &self.products[self.product_start[out]..self.product_start[out + 1]]
    }

    pub(crate) fn shifted(&self, var: usize, slot: usize) -> usize {
        self.shift[var][slot] as usize
    }
}
