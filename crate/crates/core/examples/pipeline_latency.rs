//! Clock a single header through the pipelined correlator and show when the
//! full-score window appears at the input and at the output.

use framesync::bitvec::BitVec;
use framesync::correlator::{correlate_window, select_max, PipelinedCorrelator, WindowState};
use framesync::framing::{build_header, gen_marker};

fn main() -> framesync::Result<()> {
    for l in [8usize, 16, 123] {
        let k = (l - 1) / 4;
        let marker = gen_marker(l, 1)?;
        let mut stream = BitVec::zeros(2 * l);
        stream.extend_from(&build_header(&marker, k)?);
        stream.extend_from(&BitVec::zeros(20 * l - stream.len()));

        let mut p = PipelinedCorrelator::new(&marker);
        let mut window = WindowState::new(l);
        let (mut seen_in, mut seen_out) = (None, None);
        for i in 0..stream.len() / l {
            let word = stream.slice(i * l, l);
            window.step_in_place(&word)?;
            if seen_in.is_none() && select_max(&correlate_window(&window, &marker)?).0 as usize == l
            {
                seen_in = Some(i);
            }
            let out = p.step(&word)?;
            if seen_out.is_none() && !out.warmup && out.sum_m as usize == l {
                seen_out = Some(i);
            }
        }
        let (a, b) = (seen_in.unwrap(), seen_out.unwrap());
        println!("l={l:>3}: marker enters at cycle {a}, leaves selector at cycle {b}, latency {} (model {})", b - a, p.latency());
    }
    Ok(())
}
