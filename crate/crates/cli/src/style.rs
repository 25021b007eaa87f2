use std::io::IsTerminal;

/// ANSI styling, off when `DDAC_NO_COLOR` is set or the stream is not a
/// terminal.
#[derive(Debug, Clone, Copy)]
pub struct Style {
    enabled: bool,
}

impl Style {
    pub fn for_stdout() -> Self {
        Style::detect(std::io::stdout().is_terminal())
    }

    pub fn for_stderr() -> Self {
        Style::detect(std::io::stderr().is_terminal())
    }

    fn detect(tty: bool) -> Self {
        Style {
            enabled: tty && std::env::var_os("DDAC_NO_COLOR").is_none(),
        }
    }

    fn paint(self, code: &str, s: &str) -> String {
        if self.enabled {
            format!("\x1b[{code}m{s}\x1b[0m")
        } else {
            s.to_owned()
        }
    }

    pub fn green(self, s: &str) -> String {
        self.paint("32", s)
    }

    pub fn yellow(self, s: &str) -> String {
        self.paint("33", s)
    }

    pub fn red(self, s: &str) -> String {
        self.paint("31", s)
    }

    pub fn dim(self, s: &str) -> String {
        self.paint("2", s)
    }

    pub fn bold(self, s: &str) -> String {
        self.paint("1", s)
    }
}
