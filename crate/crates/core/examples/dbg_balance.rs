use clique_mosaic::exact::{exact_decompose, DecomposeOutcome};
use clique_mosaic::extremal::{build_extremal, ExtremalParams};
use clique_mosaic::fractional::{fractional_decompose, FractionalConfig, FractionalOutcome};
use clique_mosaic::MultipartiteGraph;
use std::time::Instant;

fn main() {
    for n in [5, 6, 7] {
        let g = MultipartiteGraph::complete(3, n);
        let t = Instant::now();
        match exact_decompose(&g, 2_000_000_000) {
            DecomposeOutcome::Decomposed(d) => {
                println!("K_{n}: decomposed ({} cliques) in {:?}", d.len(), t.elapsed())
            }
            other => println!("K_{n}: {other:?} in {:?}", t.elapsed()),
        }
    }
    for m in [2, 3, 4] {
        let p = ExtremalParams { r: 3, m, q: ExtremalParams::q0(3, m) };
        let g = build_extremal(&p, 0).unwrap();
        let t = Instant::now();
        let out = fractional_decompose(&g, &FractionalConfig::default()).unwrap();
        match out {
            FractionalOutcome::Infeasible(c) => {
                println!("m={m}: LP infeasible in {:?}, cert ok = {}", t.elapsed(), c.verify(&g))
            }
            _ => println!("m={m}: UNEXPECTED feasible"),
        }
    }
}
