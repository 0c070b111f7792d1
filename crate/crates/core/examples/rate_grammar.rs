//! Rate sequences from their text form.

use semigroup_lab::grammar::parse_rate_spec;
use semigroup_lab::rates::TailBound;

fn main() {
    for text in ["poly:1:2", "geom:1.5", "const:3", "list:1,2,4,8", "poly:2:0.5", "geom:0", "cubic:1"] {
        match parse_rate_spec(text) {
            Ok(r) => {
                let first: Vec<String> = r.first(4).unwrap().iter().map(|m| format!("{m}")).collect();
                let tail = match r.tail_reciprocal_sum(0) {
                    TailBound::Finite(s) => format!("sum 1/mu = {s:.6}"),
                    TailBound::Divergent => "sum 1/mu diverges".to_string(),
                    TailBound::Unknown => "sum 1/mu unknown".to_string(),
                };
                println!("{text:<14} -> {r:<12} mu = [{}, ...]  {tail}", first.join(", "));
            }
            Err(e) => println!("{text:<14} -> {e}"),
        }
    }
}
