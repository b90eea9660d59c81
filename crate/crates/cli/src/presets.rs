//! Built-in parameter sets for the published figures and the frame check.

const FIGURES: &str = "\
Delta = 10
J = 10
G = 1
gamma = 0.001
j = -3
l = 3
";

pub const NAMES: &[&str] = &["fig2", "fig3a", "fig3b", "fig3c", "fig4-weak", "fig4-strong", "fockcheck", "fockcheck-ladder"];

/// Preset body in config-file syntax.
pub fn text(name: &str) -> Option<String> {
    let extra = match name {
        "fig2" => "r = 0:3:0.1\n",
        "fig3a" => "r = 0\nd = 1:20\n",
        "fig3b" => "r = 1\nd = 1:20\n",
        "fig3c" => "r = 0:1.5:0.01\nd = 6\n",
        "fig4-weak" => "r = 0\nt_max_ent = 3\nsamples = 600\n",
        "fig4-strong" => "r = 1.5\nt_max_ent = 3\nsamples = 600\n",
        "fockcheck" => return Some(fock("12")),
        "fockcheck-ladder" => return Some(fock("12,24,48")),
        _ => return None,
    };
    Some(format!("{FIGURES}{extra}"))
}

fn fock(delta_s: &str) -> String {
    format!(
        "r = 0.3\ndelta_s = {delta_s}\natom_offset = 0\nJ = 1\nG = 1\nn_sites = 3\nn_max = 10\nfock_atoms = 1,2\nsamples = 300\n"
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_name_resolves() {
        for name in NAMES {
            assert!(text(name).is_some(), "{name}");
        }
        assert!(text("fig5").is_none());
    }
}
