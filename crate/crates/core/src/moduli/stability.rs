use super::DoubleFramedRep;
use crate::quiver::VertexId;

/// Which stability condition failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Instability {
    /// A nonzero subrepresentation lies in the kernel of `h`.
    KernelOfH,
    /// A proper subrepresentation contains the image of `ell`.
    ImageOfEll,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StabilityReport {
    pub stable: bool,
    pub failed: Option<Instability>,
    /// Support of the offending subrepresentation, sorted.
    pub witness: Vec<VertexId>,
}

fn closure(succ: &[Vec<usize>], seeds: impl IntoIterator<Item = usize>) -> Vec<bool> {
    let mut seen = vec![false; succ.len()];
    let mut stack: Vec<usize> = seeds.into_iter().collect();
    while let Some(v) = stack.pop() {
        if !std::mem::replace(&mut seen[v], true) {
            stack.extend(&succ[v]);
        }
    }
    seen
}

/// Thin subrepresentations are exactly the vertex sets closed under
/// successors along nonzero edges. The kernel condition fails iff the
/// closure of some single vertex avoids the support of `h`; the image
/// condition fails iff the closure of the support of `ell` is not everything.
pub fn stability_check(dfr: &DoubleFramedRep) -> StabilityReport {
    let succ = dfr.successors();
    let (ell, h) = (dfr.ell_support(), dfr.h_support());
    let names = dfr.hidden().quiver.vertices();
    let to_ids = |set: &[bool]| -> Vec<VertexId> {
        let mut ids: Vec<VertexId> = (0..set.len())
            .filter(|&i| set[i])
            .map(|i| names[i].clone())
            .collect();
        ids.sort();
        ids
    };
    for v in 0..succ.len() {
        let c = closure(&succ, [v]);
        if !(0..c.len()).any(|u| c[u] && h[u]) {
            return StabilityReport {
                stable: false,
                failed: Some(Instability::KernelOfH),
                witness: to_ids(&c),
            };
        }
    }
    let c = closure(&succ, (0..ell.len()).filter(|&v| ell[v]));
    if c.iter().any(|x| !x) {
        return StabilityReport {
            stable: false,
            failed: Some(Instability::ImageOfEll),
            witness: to_ids(&c),
        };
    }
    StabilityReport {
        stable: true,
        failed: None,
        witness: Vec::new(),
    }
}

/// Exhaustive check over every vertex subset (at most 20 hidden vertices):
/// returns whether each of the two conditions holds.
pub fn stability_by_enumeration(dfr: &DoubleFramedRep) -> (bool, bool) {
    let succ = dfr.successors();
    let n = succ.len();
    assert!(n <= 20, "enumeration is limited to 20 vertices");
    let (ell, h) = (dfr.ell_support(), dfr.h_support());
    let full = (1u32 << n) - 1;
    let ell_mask = (0..n).filter(|&v| ell[v]).fold(0u32, |m, v| m | 1 << v);
    let h_mask = (0..n).filter(|&v| h[v]).fold(0u32, |m, v| m | 1 << v);
    let (mut kernel_ok, mut image_ok) = (true, true);
    for s in 0..=full {
        let closed =
            (0..n).all(|v| s & (1 << v) == 0 || succ[v].iter().all(|&u| s & (1 << u) != 0));
        if !closed {
            continue;
        }
        if s != 0 && s & h_mask == 0 {
            kernel_ok = false;
        }
        if s != full && s & ell_mask == ell_mask {
            image_ok = false;
        }
    }
    (kernel_ok, image_ok)
}
