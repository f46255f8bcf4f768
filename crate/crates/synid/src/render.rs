//! Dot-language rendering of maximal causal models as box-and-wire
//! diagrams: one box per module, one edge per wire occurrence, filled
//! junction points where a wire fans out.

use crate::expr::thread;
use crate::signature::MonoidalSignature;
use std::fmt::Write;

/// Emits a `digraph` for the maximal model of a signature.
///
/// Free inputs and leftover outputs appear as plain labels; a module whose
/// output feeds more than one consumer goes through a copy junction, as
/// does a free input used more than once.
pub fn render_dot(sig: &MonoidalSignature) -> String {
    let threading = thread(sig);
    let mut out = String::new();
    let mut push = |s: String| {
        out.push_str(&s);
        out.push('\n');
    };

    push("digraph model {".to_string());
    push("  rankdir=BT;".to_string());
    push("  node [fontname=\"Helvetica\"];".to_string());

    for m in sig.morphisms() {
        push(format!(
            "  m_{} [shape=box, style=rounded, label=\"{}\"];",
            sanitize(&m.name),
            m.name
        ));
    }

    // wire sources: either a producing module or a free-input label
    let mut edges: Vec<(String, String, String)> = Vec::new(); // (from, to, object)
    let mut junctions: Vec<String> = Vec::new();
    let mut inputs: Vec<String> = Vec::new();
    let mut outputs: Vec<String> = Vec::new();

    let mut objects: Vec<&str> = sig.objects();
    objects.sort_by_key(|o| sig.topo_rank(o));
    for obj in objects {
        let producer = sig.module_of(obj).map(|m| m.name.clone());
        let consumers: Vec<String> = sig
            .morphisms()
            .iter()
            .filter(|m| m.dom.contains(obj) && Some(&m.name) != producer.as_ref())
            .flat_map(|m| {
                std::iter::repeat_n(m.name.clone(), m.dom.multiplicity(obj) as usize)
            })
            .collect();
        let surplus = threading.surplus.multiplicity(obj) as usize;
        let is_free = threading.externals.contains(obj);

        let source = match &producer {
            Some(name) => {
                let boxed = format!("m_{}", sanitize(name));
                if is_free {
                    // the module of a free-input object consumes it from outside
                    let id = format!("in_{}", sanitize(obj));
                    inputs.push(format!("  {id} [shape=none, label=\"{obj}\"];"));
                    edges.push((id, boxed.clone(), obj.to_string()));
                }
                boxed
            }
            None if is_free || !consumers.is_empty() => {
                let id = format!("in_{}", sanitize(obj));
                inputs.push(format!("  {id} [shape=none, label=\"{obj}\"];"));
                id
            }
            None => continue,
        };

        let fan_out = consumers.len() + surplus;
        let from = if fan_out > 1 {
            let j = format!("j_{}", sanitize(obj));
            junctions.push(format!(
                "  {j} [shape=point, width=0.08, label=\"\"];"
            ));
            edges.push((source, j.clone(), obj.to_string()));
            j
        } else {
            source
        };
        for c in &consumers {
            edges.push((from.clone(), format!("m_{}", sanitize(c)), obj.to_string()));
        }
        for i in 0..surplus {
            let id = format!("out_{}_{i}", sanitize(obj));
            outputs.push(format!("  {id} [shape=none, label=\"{obj}\"];"));
            edges.push((from.clone(), id, obj.to_string()));
        }
    }

    for line in inputs.into_iter().chain(junctions).chain(outputs) {
        push(line);
    }
    for (from, to, obj) in edges {
        push(format!("  {from} -> {to} [label=\"{obj}\"];"));
    }
    push("}".to_string());
    out
}

/// Renders the exterior (collapsed) form of a signature.
pub fn render_exterior_dot(sig: &MonoidalSignature) -> crate::error::Result<String> {
    let ext = crate::expr::exterior(sig)?;
    Ok(render_dot(&ext.sig))
}

fn sanitize(name: &str) -> String {
    let mut s = String::new();
    for c in name.chars() {
        if c.is_ascii_alphanumeric() || c == '_' {
            s.push(c);
        } else {
            write!(s, "_{:x}", c as u32).expect("write to string");
        }
    }
    s
}
