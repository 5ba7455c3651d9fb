import io
import csv


def convert_rows_to_in_memory_csv(data_rows: list[list[str]], header: list[str] | None = None) -> io.StringIO:
    """
    Takes a list of rows (each a list of strings) and converts it into an
    in-memory CSV buffer, optionally preceded by a header row.
    """
    string_io = io.StringIO()
    writer = csv.writer(string_io, lineterminator='\n')
    if header:
        writer.writerow(header)
    writer.writerows(data_rows)

    # 書き込み後はカーソルが末尾にあるため、先頭に戻してから返す
    string_io.seek(0)
    return string_io


def read_key_value_csv(buffer: io.StringIO) -> dict[str, str]:
    """
    Reads a two-column CSV (key, value) such as a track -> group mapping.
    Blank lines and lines starting with '#' are skipped.
    """
    mapping = {}
    for row in csv.reader(buffer):
        if not row or row[0].startswith('#'):
            continue
        if len(row) < 2:
            raise ValueError(f"expected 'key,value' but got {row!r}")
        mapping[row[0].strip()] = row[1].strip()
    return mapping
