//! Hybrid load/store backends: a qLDPC memory feeding K surface-code compute
//! patches, with optional in-memory execution (H2, H3).

use serde::{Deserialize, Serialize};

use crate::circuit::{LogicalCircuit, RotationKind, RotationOp};
use crate::error::{Error, Result};
use crate::extractor::{InModuleCost, ModuleMap};
use crate::synthesis::{rotation_t_count, transversal_depth_of, SynthesisParams};
use crate::trace::{InstructionTrace, Opcode, TraceBuilder};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HybridPolicy {
    /// All computation in compute patches.
    H1,
    /// H1 plus in-memory single-qubit Cliffords when cheaper than a load/store.
    H2,
    /// H2 plus in-memory T injection when cheaper than a load/store.
    H3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HybridConfig {
    pub k: u32,
    pub policy: HybridPolicy,
    /// Combined store plus load cost ℓ in timesteps; each direction costs ℓ/2.
    pub load_store_cost: u32,
    /// In-memory T injection cost t_i in timesteps.
    pub in_memory_t: u32,
    pub in_module: InModuleCost,
}

impl Default for HybridConfig {
    fn default() -> Self {
        HybridConfig {
            k: 2,
            policy: HybridPolicy::H1,
            load_store_cost: 4,
            in_memory_t: 1,
            in_module: InModuleCost::default(),
        }
    }
}

impl HybridConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::Config(format!("hybrid K must be at least 2 (got {})", self.k)));
        }
        if self.load_store_cost < 2 {
            return Err(Error::Config("hybrid load_store_cost must be at least 2".into()));
        }
        if self.in_memory_t == 0 {
            return Err(Error::Config("hybrid in_memory_t must be at least 1".into()));
        }
        self.in_module.validate()
    }

    fn one_way(&self) -> u32 {
        self.load_store_cost.div_ceil(2)
    }
}

/// Where a rotation executes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Site {
    Compute,
    /// In memory, blocking the module for the given timesteps.
    Memory {
        op: Opcode,
        duration: u32,
        t_count: u32,
    },
}

fn site_of(r: &RotationOp, index: u64, cfg: &HybridConfig, sp: &SynthesisParams) -> Result<Site> {
    if cfg.policy == HybridPolicy::H1 || r.pauli.weight() != 1 {
        return Ok(Site::Compute);
    }
    let l = cfg.load_store_cost;
    let tc = cfg.in_module.sample(index);
    match r.kind {
        RotationKind::Clifford if tc < l => Ok(Site::Memory {
            op: Opcode::InMemoryClifford,
            duration: tc,
            t_count: 0,
        }),
        RotationKind::T if cfg.policy == HybridPolicy::H3 && cfg.in_memory_t < l => Ok(Site::Memory {
            op: Opcode::InMemoryT,
            duration: cfg.in_memory_t,
            t_count: 1,
        }),
        // A synthesized rotation interleaves Cliffords with its injections, so
        // both conditions must hold.
        RotationKind::Arbitrary if cfg.policy == HybridPolicy::H3 && cfg.in_memory_t < l && tc < l => {
            let tau = rotation_t_count(r, sp)? as u32;
            Ok(Site::Memory {
                op: Opcode::InMemoryT,
                duration: tau * cfg.in_memory_t + tc,
                t_count: tau,
            })
        }
        _ => Ok(Site::Compute),
    }
}

struct State<'a> {
    cfg: &'a HybridConfig,
    map: &'a ModuleMap,
    b: TraceBuilder,
    k: u32,
    /// Free time of compute patches `0..k` then memory modules `k..k+M`.
    free_at: Vec<u64>,
    occupant: Vec<Option<usize>>,
    patch_of: Vec<Option<u32>>,
    /// Future compute uses per qubit, as global rotation positions, reversed
    /// so the next use is at the back.
    uses: Vec<Vec<u64>>,
    chain: u64,
    loads: u64,
    stores: u64,
}

impl State<'_> {
    fn push(&mut self, op: Opcode, duration: u32, modules: Vec<u32>, t_count: u32) -> u64 {
        let start = modules.iter().map(|&m| self.free_at[m as usize]).max().unwrap_or(0);
        self.chain += 1;
        self.b.push(
            self.chain,
            start,
            duration,
            op,
            modules.clone(),
            0,
            t_count,
            0,
            false,
            &[],
        );
        let end = start + duration as u64;
        for m in modules {
            self.free_at[m as usize] = end;
        }
        end
    }

    fn mem(&self, q: usize) -> u32 {
        self.k + q as u32 / self.map.capacity
    }

    fn next_use(&self, q: usize) -> u64 {
        self.uses[q].last().copied().unwrap_or(u64::MAX)
    }

    /// Makes every qubit of `need` resident, evicting the resident whose next
    /// use is furthest away (lowest id on ties) among those not needed.
    fn ensure_resident(&mut self, need: &[usize]) {
        for &q in need {
            if self.patch_of[q].is_some() {
                continue;
            }
            let patch = match self.occupant.iter().position(Option::is_none) {
                Some(p) => p as u32,
                None => {
                    let victim = self
                        .occupant
                        .iter()
                        .flatten()
                        .copied()
                        .filter(|v| !need.contains(v))
                        .max_by_key(|&v| (self.next_use(v), std::cmp::Reverse(v)))
                        .expect("K exceeds the working set");
                    let p = self.patch_of[victim].take().expect("victim is resident");
                    self.occupant[p as usize] = None;
                    let m = self.mem(victim);
                    self.push(Opcode::Store, self.cfg.one_way(), vec![p, m], 0);
                    self.stores += 1;
                    p
                }
            };
            let m = self.mem(q);
            self.push(Opcode::Load, self.cfg.one_way(), vec![patch, m], 0);
            self.loads += 1;
            self.occupant[patch as usize] = Some(q);
            self.patch_of[q] = Some(patch);
        }
    }
}

/// Summary counts from a hybrid compilation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct HybridStats {
    pub loads: u64,
    pub stores: u64,
    pub in_memory_ops: u64,
}

/// Compiles `circuit` for a memory of `map` modules and `cfg.k` compute
/// patches. Each layer is packed into waves of qubit-disjoint rotations whose
/// combined support fits in K; a rotation wider than K streams its support
/// through the patches in chunks, accumulating the parity in one timestep per
/// chunk before the final chunk runs the rotation.
pub fn hybrid_schedule(
    circuit: &LogicalCircuit,
    map: &ModuleMap,
    cfg: &HybridConfig,
    sp: &SynthesisParams,
) -> Result<(InstructionTrace, HybridStats)> {
    cfg.validate()?;
    sp.validate()?;
    if circuit.num_qubits != map.num_qubits as usize {
        return Err(Error::Compile(format!(
            "circuit has {} qubits but the memory map covers {}",
            circuit.num_qubits, map.num_qubits
        )));
    }
    let n = circuit.num_qubits;
    let k = cfg.k;
    let mut sites = Vec::with_capacity(circuit.rotation_count());
    let mut uses: Vec<Vec<u64>> = vec![Vec::new(); n];
    for (i, r) in circuit.rotations().enumerate() {
        let s = site_of(r, i as u64, cfg, sp)?;
        if s == Site::Compute {
            for q in r.pauli.support() {
                uses[q].push(i as u64);
            }
        }
        sites.push(s);
    }
    uses.iter_mut().for_each(|u| u.reverse());

    let label = format!("hybrid-{:?}-k{}", cfg.policy, k).to_lowercase();
    let mut st = State {
        cfg,
        map,
        b: TraceBuilder::new(&label, k + map.num_modules),
        k,
        free_at: vec![0; (k + map.num_modules) as usize],
        occupant: vec![None; k as usize],
        patch_of: vec![None; n],
        uses,
        chain: 0,
        loads: 0,
        stores: 0,
    };
    let mut in_memory = 0u64;
    let mut index = 0usize;
    let mut t = 0u64;
    for (li, layer) in circuit.layers.iter().enumerate() {
        st.b.begin_layer(li as u32);
        st.free_at.iter_mut().for_each(|f| *f = t);
        let base = index;
        index += layer.len();
        let mut wave: Vec<usize> = Vec::new();
        let mut wave_qubits: Vec<usize> = Vec::new();
        for (j, r) in layer.iter().enumerate() {
            let g = base + j;
            if let Site::Memory { op, duration, t_count } = sites[g] {
                let q = r.pauli.support().next().expect("weight-one rotation");
                in_memory += 1;
                match st.patch_of[q] {
                    // Already resident: run it in its compute patch instead.
                    Some(p) => {
                        let depth = transversal_depth_of(r, sp)? as u32;
                        st.push(Opcode::TransversalLayer, depth, vec![p], t_count);
                        in_memory -= 1;
                    }
                    None => {
                        let m = st.mem(q);
                        st.push(op, duration, vec![m], t_count);
                    }
                }
                continue;
            }
            let support: Vec<usize> = r.pauli.support().collect();
            let disjoint = support.iter().all(|q| !wave_qubits.contains(q));
            if !(disjoint && wave_qubits.len() + support.len() <= k as usize) {
                flush(&mut st, layer, base, &mut wave, &mut wave_qubits, sp)?;
            }
            if support.len() > k as usize {
                run_chunked(&mut st, r, g, &support, sp)?;
            } else {
                wave.push(j);
                wave_qubits.extend(&support);
            }
        }
        flush(&mut st, layer, base, &mut wave, &mut wave_qubits, sp)?;
        t = st.free_at.iter().copied().max().unwrap_or(t);
    }
    let stats = HybridStats {
        loads: st.loads,
        stores: st.stores,
        in_memory_ops: in_memory,
    };
    Ok((st.b.finish(circuit.rotation_count() as u64, 0), stats))
}

fn consume_uses(st: &mut State<'_>, support: &[usize], g: usize) {
    for &q in support {
        if st.uses[q].last() == Some(&(g as u64)) {
            st.uses[q].pop();
        }
    }
}

fn flush(
    st: &mut State<'_>,
    layer: &[RotationOp],
    base: usize,
    wave: &mut Vec<usize>,
    wave_qubits: &mut Vec<usize>,
    sp: &SynthesisParams,
) -> Result<()> {
    if wave.is_empty() {
        return Ok(());
    }
    st.ensure_resident(wave_qubits);
    for &j in wave.iter() {
        let r = &layer[j];
        let support: Vec<usize> = r.pauli.support().collect();
        let patches: Vec<u32> = support.iter().map(|&q| st.patch_of[q].expect("resident")).collect();
        let depth = transversal_depth_of(r, sp)? as u32;
        let tc = rotation_t_count(r, sp)? as u32;
        st.push(Opcode::TransversalLayer, depth, patches, tc);
        consume_uses(st, &support, base + j);
    }
    wave.clear();
    wave_qubits.clear();
    Ok(())
}

fn run_chunked(st: &mut State<'_>, r: &RotationOp, g: usize, support: &[usize], sp: &SynthesisParams) -> Result<()> {
    // One patch holds the running parity; the rest stream the support.
    let width = st.k as usize - 1;
    let chunks: Vec<&[usize]> = support.chunks(width).collect();
    let last = chunks.len() - 1;
    for (c, chunk) in chunks.iter().enumerate() {
        st.ensure_resident(chunk);
        let patches: Vec<u32> = chunk.iter().map(|&q| st.patch_of[q].expect("resident")).collect();
        if c < last {
            st.push(Opcode::TransversalLayer, 1, patches, 0);
        } else {
            let depth = transversal_depth_of(r, sp)? as u32;
            let tc = rotation_t_count(r, sp)? as u32;
            st.push(Opcode::TransversalLayer, depth, patches, tc);
        }
        consume_uses(st, chunk, g);
    }
    Ok(())
}

/// Geometric grid of compute-patch counts from 2 to ⌊0.75 N⌋.
pub fn k_grid(num_qubits: usize, points: usize) -> Vec<u32> {
    let hi = ((num_qubits as f64 * 0.75).floor() as u32).max(2);
    let points = points.max(2);
    let mut ks: Vec<u32> = (0..points)
        .map(|i| {
            let f = i as f64 / (points - 1) as f64;
            (2.0 * (hi as f64 / 2.0).powf(f)).round() as u32
        })
        .collect();
    ks.dedup();
    ks
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extractor::map_qubits;
    use crate::resources::CodeParams;

    fn zz(n: usize, a: usize, b: usize) -> RotationOp {
        let mut s = vec!['I'; n];
        s[a] = 'Z';
        s[b] = 'Z';
        RotationOp::arbitrary(s.into_iter().collect::<String>().parse().unwrap(), 0.1, 1e-3).unwrap()
    }

    #[test]
    fn k_below_two_rejected() {
        let cfg = HybridConfig {
            k: 1,
            ..Default::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn fits_in_k_needs_only_initial_loads() {
        let c = LogicalCircuit::from_rotations(3, vec![zz(3, 0, 1), zz(3, 1, 2), zz(3, 0, 2)]).unwrap();
        let map = map_qubits(3, &CodeParams::two_gross(), true).unwrap();
        let cfg = HybridConfig {
            k: 3,
            ..Default::default()
        };
        let (_, s) = hybrid_schedule(&c, &map, &cfg, &SynthesisParams::default()).unwrap();
        assert_eq!((s.loads, s.stores), (3, 0));
    }

    #[test]
    fn grid_endpoints() {
        let g = k_grid(100, 6);
        assert_eq!(g.first(), Some(&2));
        assert_eq!(g.last(), Some(&75));
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }
}
