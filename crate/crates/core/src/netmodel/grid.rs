//! Synthetic orthogonal grid networks with standard 4-approach signalized
//! intersections and boundary stubs for demand entry/exit.

use super::{
    Edge, EdgeIdx, IntersectionSpec, MoveIdx, Movement, NetworkModel, Node, NodeIdx, TurnClass,
};

/// Builds a `rows x cols` grid of signalized intersections connected by
/// bidirectional edges, with boundary stub edges on all four sides.
///
/// Signal tables default to two phases (NS-through / EW-through); with two or
/// more lanes per edge, protected left-turn phases are added.
pub fn generate_grid(
    rows: u32,
    cols: u32,
    edge_length: f64,
    lanes: u32,
    speed_limit: f64,
) -> Result<NetworkModel, String> {
    if rows < 1 || cols < 1 {
        return Err("grid needs at least 1 row and 1 column".into());
    }
    let step = edge_length;
    let mut nodes: Vec<Node> = Vec::new();
    let mut node_at = std::collections::BTreeMap::<String, NodeIdx>::new();
    let push_node = |nodes: &mut Vec<Node>,
                     node_at: &mut std::collections::BTreeMap<String, NodeIdx>,
                     id: String,
                     x: f64,
                     y: f64| {
        let idx = NodeIdx(nodes.len() as u32);
        nodes.push(Node {
            id: id.clone(),
            x,
            y,
        });
        node_at.insert(id, idx);
        idx
    };

    // Interior junctions, row-major.
    for r in 0..rows {
        for c in 0..cols {
            push_node(
                &mut nodes,
                &mut node_at,
                format!("J{r}x{c}"),
                c as f64 * step,
                r as f64 * step,
            );
        }
    }
    // Boundary stub nodes.
    for c in 0..cols {
        push_node(
            &mut nodes,
            &mut node_at,
            format!("S{c}"),
            c as f64 * step,
            -step,
        );
        push_node(
            &mut nodes,
            &mut node_at,
            format!("N{c}"),
            c as f64 * step,
            rows as f64 * step,
        );
    }
    for r in 0..rows {
        push_node(
            &mut nodes,
            &mut node_at,
            format!("W{r}"),
            -step,
            r as f64 * step,
        );
        push_node(
            &mut nodes,
            &mut node_at,
            format!("E{r}"),
            cols as f64 * step,
            r as f64 * step,
        );
    }

    // Directed edges between adjacent nodes, both directions.
    let mut edges: Vec<Edge> = Vec::new();
    let add_pair = |edges: &mut Vec<Edge>, a: &str, b: &str| {
        for (u, v) in [(a, b), (b, a)] {
            edges.push(Edge {
                id: format!("{u}->{v}"),
                from: node_at[u],
                to: node_at[v],
                length: edge_length,
                lanes,
                speed_limit,
            });
        }
    };
    for r in 0..rows {
        for c in 0..cols {
            let here = format!("J{r}x{c}");
            if c + 1 < cols {
                add_pair(&mut edges, &here, &format!("J{r}x{}", c + 1));
            }
            if r + 1 < rows {
                add_pair(&mut edges, &here, &format!("J{}x{c}", r + 1));
            }
            if r == 0 {
                add_pair(&mut edges, &format!("S{c}"), &here);
            }
            if r + 1 == rows {
                add_pair(&mut edges, &here, &format!("N{c}"));
            }
            if c == 0 {
                add_pair(&mut edges, &format!("W{r}"), &here);
            }
            if c + 1 == cols {
                add_pair(&mut edges, &here, &format!("E{r}"));
            }
        }
    }

    // Movements at every interior junction: right from the rightmost lane,
    // through on every lane, left from the leftmost lane.
    let mut movements: Vec<Movement> = Vec::new();
    let mut movements_of_node: Vec<Vec<MoveIdx>> = vec![Vec::new(); nodes.len()];
    for (ni, node) in nodes.iter().enumerate() {
        if !node.id.starts_with('J') {
            continue;
        }
        let incoming: Vec<EdgeIdx> = edges
            .iter()
            .enumerate()
            .filter(|(_, e)| e.to == NodeIdx(ni as u32))
            .map(|(i, _)| EdgeIdx(i as u32))
            .collect();
        let outgoing: Vec<EdgeIdx> = edges
            .iter()
            .enumerate()
            .filter(|(_, e)| e.from == NodeIdx(ni as u32))
            .map(|(i, _)| EdgeIdx(i as u32))
            .collect();
        for &ein in &incoming {
            let e = &edges[ein.usize()];
            let d_in = direction(&nodes, e.from, e.to);
            // Classify each outgoing edge relative to the approach heading.
            let mut thru = None;
            let mut left = None;
            let mut right = None;
            for &eout in &outgoing {
                let o = &edges[eout.usize()];
                if o.to == e.from {
                    continue; // no U-turns
                }
                let d_out = direction(&nodes, o.from, o.to);
                let dot = d_in.0 * d_out.0 + d_in.1 * d_out.1;
                let cross = d_in.0 * d_out.1 - d_in.1 * d_out.0;
                if dot > 0.707 {
                    thru = Some(eout);
                } else if cross > 0.0 {
                    left = Some(eout);
                } else {
                    right = Some(eout);
                }
            }
            let mut add = |movements: &mut Vec<Movement>,
                           to_edge: EdgeIdx,
                           from_lane: u32,
                           to_lane: u32,
                           turn: TurnClass| {
                let idx = MoveIdx(movements.len() as u32);
                movements.push(Movement {
                    id: format!("m{}", movements.len()),
                    from_edge: ein,
                    from_lane,
                    to_edge,
                    to_lane,
                    turn,
                });
                movements_of_node[ni].push(idx);
            };
            if let Some(t) = thru {
                for lane in 0..lanes {
                    add(&mut movements, t, lane, lane, TurnClass::Through);
                }
            }
            if let Some(l) = left {
                add(&mut movements, l, lanes - 1, lanes - 1, TurnClass::Left);
            }
            if let Some(r) = right {
                add(&mut movements, r, 0, 0, TurnClass::Right);
            }
        }
    }

    // Phase tables: group movements by north-south vs east-west approach.
    let mut intersections: Vec<IntersectionSpec> = Vec::new();
    for (ni, node) in nodes.iter().enumerate() {
        if !node.id.starts_with('J') {
            continue;
        }
        let moves = &movements_of_node[ni];
        let is_ns = |m: MoveIdx| {
            let mv = &movements[m.usize()];
            let e = &edges[mv.from_edge.usize()];
            let d = direction(&nodes, e.from, e.to);
            d.1.abs() > d.0.abs()
        };
        let (phases, cycle) = if lanes >= 2 {
            let ns_tr: Vec<MoveIdx> = moves
                .iter()
                .copied()
                .filter(|&m| is_ns(m) && movements[m.usize()].turn != TurnClass::Left)
                .collect();
            let ns_l: Vec<MoveIdx> = moves
                .iter()
                .copied()
                .filter(|&m| is_ns(m) && movements[m.usize()].turn == TurnClass::Left)
                .collect();
            let ew_tr: Vec<MoveIdx> = moves
                .iter()
                .copied()
                .filter(|&m| !is_ns(m) && movements[m.usize()].turn != TurnClass::Left)
                .collect();
            let ew_l: Vec<MoveIdx> = moves
                .iter()
                .copied()
                .filter(|&m| !is_ns(m) && movements[m.usize()].turn == TurnClass::Left)
                .collect();
            (vec![ns_tr, ns_l, ew_tr, ew_l], vec![30.0, 10.0, 30.0, 10.0])
        } else {
            let ns: Vec<MoveIdx> = moves.iter().copied().filter(|&m| is_ns(m)).collect();
            let ew: Vec<MoveIdx> = moves.iter().copied().filter(|&m| !is_ns(m)).collect();
            (vec![ns, ew], vec![30.0, 30.0])
        };
        intersections.push(IntersectionSpec {
            node: NodeIdx(ni as u32),
            phases,
            yellow_s: 3.0,
            fixed_cycle_s: cycle,
        });
    }

    NetworkModel::assemble(nodes, edges, movements, intersections, None)
}

fn direction(nodes: &[Node], from: NodeIdx, to: NodeIdx) -> (f64, f64) {
    let a = &nodes[from.usize()];
    let b = &nodes[to.usize()];
    let dx = b.x - a.x;
    let dy = b.y - a.y;
    let len = (dx * dx + dy * dy).sqrt().max(1e-9);
    (dx / len, dy / len)
}
