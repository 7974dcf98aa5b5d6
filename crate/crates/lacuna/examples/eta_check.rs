// quick numeric check of eta at several mask resolutions
use lacuna::indices::{primary_indices, ImageTriple};
use lacuna::interior::{EmbeddingSpec, GridSpec, InteriorPolicy};
use lacuna::mask::BinaryMask;

fn eta_for(n: usize, block: usize, g: usize) -> f64 {
    let lo = (n - block) / 2;
    let hi = lo + block;
    let core = BinaryMask::filled(n, n).unwrap();
    let inside = move |c: usize, r: usize| (lo..hi).contains(&c) && (lo..hi).contains(&r);
    let necrosis = BinaryMask::from_fn(n, n, inside).unwrap();
    let enhanced = BinaryMask::from_fn(n, n, |c, r| !inside(c, r)).unwrap();
    let triple = ImageTriple::new(core, enhanced, Some(necrosis)).unwrap();
    let p = primary_indices(&triple, &EmbeddingSpec::default(), &GridSpec { resolution: g }, InteriorPolicy::Drop);
    eprintln!("n={n} block={block} G={g}: eta={:.6} tau={:.6} int={:.6}", p.eta, p.tau, p.integral_core);
    p.eta
}

fn main() {
    let t0 = std::time::Instant::now();
    eta_for(15, 5, 100);
    eta_for(15, 5, 200);
    eta_for(45, 15, 100);
    eta_for(45, 15, 200);
    eta_for(99, 33, 100);
    eprintln!("total {:?}", t0.elapsed());
}
