//! Read networks from edge lists and weighted adjacency matrices, and write
//! them back.
//!
//! ```bash
//! cargo run --example ingest_networks
//! ```

use jointgraphon::io::{parse_adjacency_str, parse_edge_list_str, write_adjacency, write_edge_list};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let edges = "# friendships\nalice bob\nbob carol\ncarol alice\nbob alice\ndave\n";
    let g = parse_edge_list_str(edges)?;
    println!("edge list: {} nodes, {} edges, labels {:?}", g.n(), g.edge_count(), g.labels());

    let weighted = "r1,r2,r3,r4\n\
                    1,0.55,0.40,0.12\n\
                    0.55,1,0.71,0.39\n\
                    0.40,0.71,1,0.41\n\
                    0.12,0.39,0.41,1\n";
    let h = parse_adjacency_str(weighted, Some(0.4))?;
    println!("thresholded at 0.4: edges {:?}, density {:.3}", h.edges(), h.density());

    let mut out = Vec::new();
    write_edge_list(&g, &mut out)?;
    print!("{}", String::from_utf8(out)?);
    let mut out = Vec::new();
    write_adjacency(&h, &mut out)?;
    print!("{}", String::from_utf8(out)?);
    Ok(())
}
