//! Generate a clustered instance, write it as JSON and read it back.
//!
//! cargo run --example generate_instance -- [nodes] [scenarios] [seed]

use cvarloc::instance::{generate_instance, parse_instance, serialize_instance, GeneratorParams};

fn main() -> cvarloc::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let nodes = args.first().copied().unwrap_or(40);
    let scenarios = args.get(1).copied().unwrap_or(10);
    let seed = args.get(2).copied().unwrap_or(1) as u64;

    let (inst, scen) = generate_instance(seed, nodes, scenarios, &GeneratorParams::default())?;
    println!("{} demand nodes, {} candidate sites, {} scenarios", inst.num_demand(), inst.num_sites(), scen.len());
    for j in 0..inst.num_sites() {
        let reach = (0..inst.num_demand()).filter(|&i| inst.covers(i, j)).count();
        println!("  site {j}: cost {} capacity {} covers {reach} nodes", inst.opening_cost(j), inst.capacity(j));
    }
    println!("scenario totals: {:?}", scen.totals());

    let text = serialize_instance(&inst, &scen)?;
    let (back, back_scen) = parse_instance(text.as_bytes())?;
    assert_eq!(back.num_sites(), inst.num_sites());
    assert_eq!(back_scen.rows(), scen.rows());
    println!("round trip ok ({} bytes of JSON)", text.len());
    Ok(())
}
