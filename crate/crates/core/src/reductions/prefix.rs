use std::ops::ControlFlow;

use crate::concepts::{Dichotomy, Instance, Label, LabeledData};

/// Arena of pseudo-label prefixes stored as a parent-pointer tree.
///
/// Node 0 is the empty prefix. A node at depth `t` labels the `t`-th
/// committed instance.
#[derive(Clone, Debug)]
pub struct PrefixArena {
    parent: Vec<u32>,
    bit: Vec<Label>,
    depth: Vec<u32>,
}

impl Default for PrefixArena {
    fn default() -> Self {
        Self::new()
    }
}

impl PrefixArena {
    pub const ROOT: u32 = 0;

    pub fn new() -> Self {
        PrefixArena {
            parent: vec![u32::MAX],
            bit: vec![Label::ZERO],
            depth: vec![0],
        }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn push(&mut self, parent: u32, bit: Label) -> u32 {
        let id = u32::try_from(self.parent.len()).expect("prefix arena exceeds u32 ids");
        let depth = self.depth[parent as usize] + 1;
        self.parent.push(parent);
        self.bit.push(bit);
        self.depth.push(depth);
        id
    }

    pub fn depth(&self, node: u32) -> usize {
        self.depth[node as usize] as usize
    }

    pub fn last_bit(&self, node: u32) -> Label {
        self.bit[node as usize]
    }

    /// The pseudo-labels of `node`, oldest first.
    pub fn bits(&self, node: u32) -> Vec<Label> {
        let mut out = Vec::with_capacity(self.depth(node));
        let mut cur = node;
        while cur != Self::ROOT {
            out.push(self.bit[cur as usize]);
            cur = self.parent[cur as usize];
        }
        out.reverse();
        out
    }

    pub fn dichotomy(&self, node: u32) -> Dichotomy {
        Dichotomy(self.bits(node))
    }

    /// `node`'s prefix paired with the instances it labels.
    pub fn view<'a>(&'a self, history: &'a [Instance], node: u32) -> PrefixView<'a> {
        debug_assert!(self.depth(node) <= history.len());
        PrefixView {
            arena: self,
            history,
            node,
        }
    }
}

/// A labeled dataset read straight out of a [`PrefixArena`].
#[derive(Clone, Copy)]
pub struct PrefixView<'a> {
    arena: &'a PrefixArena,
    history: &'a [Instance],
    node: u32,
}

impl LabeledData for PrefixView<'_> {
    fn len(&self) -> usize {
        self.arena.depth(self.node)
    }

    fn try_for_each_pair<F>(&self, mut f: F) -> ControlFlow<()>
    where
        F: FnMut(Instance, Label) -> ControlFlow<()>,
    {
        let mut cur = self.node as usize;
        while cur != PrefixArena::ROOT as usize {
            let t = self.arena.depth[cur] as usize;
            f(self.history[t - 1], self.arena.bit[cur])?;
            cur = self.arena.parent[cur] as usize;
        }
        ControlFlow::Continue(())
    }
}
