public int size() { return count; }
@Override public String toString() { return "Term(" + field + ":" + text + ")"; }
public boolean isEmpty() { return size == 0; }
public void clear() { for (int i = 0; i < count; i++) { buffer[i] = null; } count = 0; }
public int indexOf(Object o) { for (int i = 0; i < size; i++) { if (o.equals(elements[i])) { return i; } } return -1; }
public String getName() { return name; }
public void setValue(int value) { this.value = value; }
public long sum(int[] values) { long total = 0; for (int v : values) { total += v; } return total; }
public Object get(String key) { try { return map.get(key); } catch (NullPointerException e) { return null; } }
public int compareTo(Version other) { if (major != other.major) { return major - other.major; } return minor - other.minor; }
