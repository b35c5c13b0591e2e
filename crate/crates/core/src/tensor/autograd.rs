use std::cell::Cell;
use std::collections::{HashMap, HashSet};

use super::{Scalar, Tensor};
use crate::error::{Error, Result};

thread_local! {
    static GRAD_ENABLED: Cell<bool> = const { Cell::new(true) };
}

pub fn is_grad_enabled() -> bool {
    GRAD_ENABLED.with(Cell::get)
}

struct ModeGuard(bool);

impl ModeGuard {
    fn set(enabled: bool) -> Self {
        ModeGuard(GRAD_ENABLED.with(|c| c.replace(enabled)))
    }
}

impl Drop for ModeGuard {
    fn drop(&mut self) {
        GRAD_ENABLED.with(|c| c.set(self.0));
    }
}

/// Runs `f` without recording operations.
pub fn no_grad<R>(f: impl FnOnce() -> R) -> R {
    let _guard = ModeGuard::set(false);
    f()
}

/// Reverse topological order of the recorded subgraph below `root`.
fn topo_order<T: Scalar>(root: &Tensor<T>) -> Vec<Tensor<T>> {
    let mut order = Vec::new();
    let mut seen = HashSet::new();
    let mut stack = vec![(root.clone(), false)];
    while let Some((t, expanded)) = stack.pop() {
        if expanded {
            order.push(t);
            continue;
        }
        if !seen.insert(t.id()) {
            continue;
        }
        stack.push((t.clone(), true));
        if let Some(op) = t.op() {
            for p in op.parents() {
                if p.requires_grad() && !seen.contains(&p.id()) {
                    stack.push((p.clone(), false));
                }
            }
        }
    }
    order.reverse();
    order
}

/// Gradients of a scalar `output` with respect to each tensor in `wrt`.
///
/// Tensors that `output` does not depend on get zero gradients. With
/// `create_graph` the returned gradients are themselves recorded and can be
/// differentiated again.
pub fn grad<T: Scalar>(output: &Tensor<T>, wrt: &[&Tensor<T>], create_graph: bool) -> Result<Vec<Tensor<T>>> {
    if output.numel() != 1 {
        return Err(Error::dim(
            "grad",
            format!("output must be scalar, got shape {:?}", output.shape()),
        ));
    }
    let _mode = ModeGuard::set(create_graph);
    let targets: HashSet<usize> = wrt.iter().map(|t| t.id()).collect();
    let mut found: HashMap<usize, Tensor<T>> = HashMap::new();

    if output.requires_grad() {
        let mut grads: HashMap<usize, Tensor<T>> = HashMap::new();
        grads.insert(output.id(), Tensor::full(output.shape(), T::one()));
        for node in topo_order(output) {
            let Some(g) = grads.remove(&node.id()) else {
                continue;
            };
            if targets.contains(&node.id()) {
                found.insert(node.id(), g.clone());
            }
            let Some(op) = node.op() else {
                continue;
            };
            let parent_grads = op.backward(&node, &g)?;
            for (p, pg) in op.parents().into_iter().zip(parent_grads) {
                if !p.requires_grad() {
                    continue;
                }
                let acc = match grads.remove(&p.id()) {
                    Some(prev) => prev.add(&pg)?,
                    None => pg,
                };
                grads.insert(p.id(), acc);
            }
        }
    }
    Ok(wrt
        .iter()
        .map(|t| found.get(&t.id()).cloned().unwrap_or_else(|| Tensor::zeros(t.shape())))
        .collect())
}
