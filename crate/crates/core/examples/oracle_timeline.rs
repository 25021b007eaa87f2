//! Replays a trace through the brute-force oracle and prints the timeline.
//!
//! Used to produce golden files independently of the production resolver:
//!
//!     cargo run -p ddac-core --example oracle_timeline -- RULES TRACE > golden.json

use std::process::ExitCode;

use ddac_core::simulator::apply_event;
use ddac_core::{oracle_resolve, parse_ruleset, Blackboard, ChannelKind, PerChannel, ResolvedState, Timeline, Trace};

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let [rules, trace] = args.as_slice() else {
        eprintln!("usage: oracle_timeline RULES TRACE");
        return ExitCode::from(4);
    };
    let rs = parse_ruleset(&std::fs::read(rules).expect("read rules")).expect("parse rules");
    let trace = Trace::from_json(&std::fs::read(trace).expect("read trace")).expect("parse trace");

    let mut bb = Blackboard::new();
    let mut entries: Vec<ResolvedState> = Vec::new();
    for (i, ev) in trace.ticks.iter().enumerate() {
        apply_event(&mut bb, i, ev).expect("apply tick");
        let snap = bb.snapshot(i as u64);
        let res = PerChannel::from_fn(|k| oracle_resolve(rs.channel(k), &snap));
        let value = |k: ChannelKind| res[k].value.clone();
        let state = ResolvedState {
            tick: i as u64,
            animation: value(ChannelKind::Animation).as_text().unwrap().to_owned(),
            h_flip: value(ChannelKind::HFlip).as_bool().unwrap(),
            v_flip: value(ChannelKind::VFlip).as_bool().unwrap(),
            speed_scale: value(ChannelKind::SpeedScale).as_real().unwrap(),
            winners: res.map(|_, r| r.winners.clone()),
            changed: true,
            traces: PerChannel::default(),
        };
        let changed = match entries.last() {
            None => true,
            Some(p) => ChannelKind::ALL.iter().any(|&k| p.value(k) != state.value(k)),
        };
        entries.push(ResolvedState { changed, ..state });
    }
    print!("{}", String::from_utf8(Timeline { entries }.to_json()).unwrap());
    ExitCode::SUCCESS
}
